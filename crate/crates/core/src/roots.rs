//! Scalar root finding and maximization used by the power solvers.

/// Result of a bracketing root search.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Root {
    pub x: f64,
    pub fx: f64,
    /// End of the final bracket on the side where `f` has the sign of the
    /// initial `f(hi)`.
    pub hi: f64,
    pub iterations: usize,
}

/// Illinois (modified regula falsi) on `[lo, hi]` with `f(lo)` and `f(hi)` of
/// opposite sign. Falls back to bisection whenever the bracket fails to halve
/// for a few steps, so discontinuous `f` still converges to the jump.
pub(crate) fn bracketed<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    mut f_lo: f64,
    mut f_hi: f64,
    ftol: f64,
    xtol: f64,
    max_iter: usize,
) -> Root {
    debug_assert!(f_lo * f_hi <= 0.0, "root not bracketed");
    let done = |lo: f64, hi: f64| (hi - lo).abs() <= xtol * (1.0 + lo.abs().max(hi.abs()));
    if f_lo == 0.0 {
        return Root {
            x: lo,
            fx: 0.0,
            hi,
            iterations: 0,
        };
    }
    if f_hi == 0.0 {
        return Root {
            x: hi,
            fx: 0.0,
            hi,
            iterations: 0,
        };
    }
    let mut side = 0i8;
    let mut stall = 0u8;
    let mut width = (hi - lo).abs();
    let mut it = 0;
    let (mut best_x, mut best_f) = if f_lo.abs() < f_hi.abs() {
        (lo, f_lo)
    } else {
        (hi, f_hi)
    };
    while it < max_iter {
        it += 1;
        let mut x = if stall >= 3 {
            stall = 0;
            0.5 * (lo + hi)
        } else {
            (lo * f_hi - hi * f_lo) / (f_hi - f_lo)
        };
        if !(x > lo.min(hi) && x < lo.max(hi)) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        if fx.abs() < best_f.abs() {
            best_x = x;
            best_f = fx;
        }
        if fx == 0.0 || fx.abs() <= ftol {
            return Root {
                x,
                fx,
                hi,
                iterations: it,
            };
        }
        if (fx > 0.0) == (f_lo > 0.0) {
            lo = x;
            f_lo = fx;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            f_hi = fx;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
        let w = (hi - lo).abs();
        if w > 0.5 * width {
            stall += 1;
        } else {
            stall = 0;
        }
        width = w;
        if done(lo, hi) {
            break;
        }
    }
    Root {
        x: best_x,
        fx: best_f,
        hi,
        iterations: it,
    }
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
pub(crate) fn golden_max<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    rtol: f64,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= rtol * (a.abs() + b.abs()) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Positive root of `A x^2 + B x - C = 0` for `A >= 0`, `B > 0`, or 0 when
/// `C <= 0`. Written in the cancellation-free form.
pub(crate) fn positive_quadratic_root(a: f64, b: f64, c: f64) -> f64 {
    if c <= 0.0 {
        return 0.0;
    }
    2.0 * c / (b + (b * b + 4.0 * a * c).sqrt())
}
