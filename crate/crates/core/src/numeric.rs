//! Small bracketing routines shared by the solvers.

/// Bisection on `[lo, hi]` with `f(lo) < 0 <= f(hi)` assumed (or the mirror,
/// via `increasing = false`). Runs until the bracket stops shrinking in
/// floating point or its width drops under `tol`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64, increasing: bool) -> f64 {
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= tol {
            break;
        }
        let v = f(mid);
        let below = if increasing { v < 0.0 } else { v > 0.0 };
        if below {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section search for the maximizer of a unimodal `f` on `[lo, hi]`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
        if x1 >= x2 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Dense scan followed by golden refinement in the best cell. Safer than a bare
/// golden search when unimodality is only expected, not known.
pub fn scan_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, samples: usize) -> (f64, f64) {
    let n = samples.max(2);
    let step = (hi - lo) / (n - 1) as f64;
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..n {
        let v = f(lo + i as f64 * step);
        if v > best_v {
            best_v = v;
            best = i;
        }
    }
    let a = lo + best.saturating_sub(1) as f64 * step;
    let b = (lo + (best + 1) as f64 * step).min(hi);
    let x = golden_max(&f, a, b, 1e-13 * (1.0 + b.abs()));
    let v = f(x);
    if v >= best_v {
        (x, v)
    } else {
        (lo + best as f64 * step, best_v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 0.0, true);
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn golden_finds_parabola_peak() {
        let x = golden_max(|x| -(x - 0.3) * (x - 0.3), -1.0, 2.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6);
    }

    #[test]
    fn scan_handles_peak_at_edge() {
        let (x, v) = scan_max(|x| x, 0.0, 1.0, 11);
        assert!((x - 1.0).abs() < 1e-9 && (v - 1.0).abs() < 1e-9);
    }
}
