//! Fixed-format CSV output: `#` comment lines, a header, six decimals.

pub struct Table {
    out: String,
    width: usize,
}

impl Table {
    pub fn new(command: &str, comments: &[String], columns: &[&str]) -> Self {
        let mut out = format!("# scnsim {command}\n");
        for c in comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push_str(&columns.join(","));
        out.push('\n');
        Table {
            out,
            width: columns.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.width);
        self.out.push_str(&cells.join(","));
        self.out.push('\n');
    }

    pub fn finish(self) -> String {
        self.out
    }
}

/// Formats a value; missing and NaN values are empty.
pub fn cell(x: impl Into<Option<f64>>) -> String {
    match x.into() {
        None => String::new(),
        Some(x) if x.is_nan() => String::new(),
        Some(x) if x.is_infinite() => if x > 0.0 { "inf" } else { "-inf" }.into(),
        Some(x) => format!("{x:.6}"),
    }
}
