//! Torus geometry and a uniform-cell spatial index.

/// Distance on a square torus of side `side`.
#[inline]
pub fn torus_distance(a: [f64; 2], b: [f64; 2], side: f64) -> f64 {
    let mut dx = (a[0] - b[0]).abs();
    let mut dy = (a[1] - b[1]).abs();
    if dx > 0.5 * side {
        dx = side - dx;
    }
    if dy > 0.5 * side {
        dy = side - dy;
    }
    (dx * dx + dy * dy).sqrt()
}

/// Points bucketed into an `n × n` grid of square cells, stored CSR-style.
#[derive(Debug, Clone)]
pub struct Grid {
    n: usize,
    cell: f64,
    start: Vec<u32>,
    items: Vec<u32>,
}

impl Grid {
    /// Builds a grid holding about `per_cell` points per cell.
    pub fn build(points: &[[f64; 2]], side: f64, per_cell: f64) -> Self {
        let target = (points.len().max(1) as f64 / per_cell).sqrt();
        let n = (target.floor() as usize).clamp(1, 4096);
        let cell = side / n as f64;
        let idx = |p: [f64; 2]| {
            let cx = ((p[0] / cell) as usize).min(n - 1);
            let cy = ((p[1] / cell) as usize).min(n - 1);
            cy * n + cx
        };
        let mut counts = vec![0u32; n * n + 1];
        for &p in points {
            counts[idx(p) + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; points.len()];
        for (i, &p) in points.iter().enumerate() {
            let c = idx(p);
            items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        Grid {
            n,
            cell,
            start: counts,
            items,
        }
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    /// Largest ring index; rings `0..=max_ring()` partition the grid.
    pub fn max_ring(&self) -> usize {
        self.n / 2
    }

    pub fn cell_of(&self, p: [f64; 2]) -> (usize, usize) {
        let cx = ((p[0] / self.cell) as usize).min(self.n - 1);
        let cy = ((p[1] / self.cell) as usize).min(self.n - 1);
        (cx, cy)
    }

    /// Calls `f` on every point in cells at wrapped Chebyshev distance `k`
    /// from cell `(cx, cy)`. Every point within distance `(k - 1)·cell` of a
    /// point in the centre cell lies in rings `0..k`.
    pub fn for_ring(&self, (cx, cy): (usize, usize), k: usize, mut f: impl FnMut(u32)) {
        let n = self.n as isize;
        let k = k as isize;
        // On even grids the two ends of the widest ring are the same cells.
        let lo = if 2 * k == n { -k + 1 } else { -k };
        let mut visit = |dx: isize, dy: isize| {
            let x = (cx as isize + dx).rem_euclid(n) as usize;
            let y = (cy as isize + dy).rem_euclid(n) as usize;
            let c = y * self.n + x;
            for &i in &self.items[self.start[c] as usize..self.start[c + 1] as usize] {
                f(i);
            }
        };
        if k == 0 {
            visit(0, 0);
            return;
        }
        if 2 * k == n {
            for dx in lo..=k {
                visit(dx, k);
            }
            for dy in lo..k {
                visit(k, dy);
            }
        } else {
            for dx in -k..=k {
                visit(dx, k);
                visit(dx, -k);
            }
            for dy in -k + 1..k {
                visit(k, dy);
                visit(-k, dy);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn torus_wraps() {
        assert!((torus_distance([0.1, 0.1], [0.9, 0.9], 1.0) - 0.2f64.hypot(0.2)).abs() < 1e-12);
        assert!((torus_distance([0.2, 0.5], [0.4, 0.5], 1.0) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn rings_partition_every_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for count in [1usize, 5, 17, 64, 301] {
            let side = 2.0;
            let pts: Vec<[f64; 2]> = (0..count)
                .map(|_| [rng.random::<f64>() * side, rng.random::<f64>() * side])
                .collect();
            for per_cell in [0.5, 2.0, 7.0] {
                let g = Grid::build(&pts, side, per_cell);
                for centre in [(0, 0), g.cell_of([1.3, 0.2]), g.cell_of([1.99, 1.99])] {
                    let mut seen = vec![0; count];
                    for k in 0..=g.max_ring() {
                        g.for_ring(centre, k, |i| seen[i as usize] += 1);
                    }
                    assert!(seen.iter().all(|&s| s == 1), "n = {} count = {count}", g.n);
                }
            }
        }
    }

    #[test]
    fn ring_distance_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let side = 1.0;
        let pts: Vec<[f64; 2]> = (0..500).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
        let g = Grid::build(&pts, side, 2.0);
        for _ in 0..50 {
            let p = [rng.random::<f64>(), rng.random::<f64>()];
            let c = g.cell_of(p);
            for k in 2..=g.max_ring() {
                g.for_ring(c, k, |i| {
                    assert!(torus_distance(p, pts[i as usize], side) >= (k - 1) as f64 * g.cell_size() - 1e-12);
                });
            }
        }
    }
}
