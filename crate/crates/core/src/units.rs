//! Decibel conversions. Powers are linear milliwatts inside the crate.

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[inline]
pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_linear(dbm)
}

#[inline]
pub fn mw_to_dbm(mw: f64) -> f64 {
    linear_to_db(mw)
}

#[inline]
pub fn mw_to_w(mw: f64) -> f64 {
    mw * 1e-3
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        assert!((dbm_to_mw(24.0) - 251.188_643_150_958).abs() < 1e-9);
        assert!((mw_to_dbm(dbm_to_mw(-95.0)) + 95.0).abs() < 1e-12);
        assert_eq!(db_to_linear(0.0), 1.0);
        assert_eq!(mw_to_w(1000.0), 1.0);
    }
}
