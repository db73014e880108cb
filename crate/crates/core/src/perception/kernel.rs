use crate::math;

/// Kernel profile supported on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// `max(0, 1 − u)`.
    Triangular,
    /// `max(0, 1 − u²)`.
    Epanechnikov,
    /// Indicator of `[0, 1]`; not Lipschitz.
    Box,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Kernel {
    pub kind: KernelKind,
}

impl Default for Kernel {
    fn default() -> Self {
        Self::triangular()
    }
}

impl Kernel {
    pub fn triangular() -> Self {
        Self {
            kind: KernelKind::Triangular,
        }
    }

    pub fn epanechnikov() -> Self {
        Self {
            kind: KernelKind::Epanechnikov,
        }
    }

    pub fn boxcar() -> Self {
        Self {
            kind: KernelKind::Box,
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        if !(0.0..=1.0).contains(&u) {
            return 0.0;
        }
        match self.kind {
            KernelKind::Triangular => 1.0 - u,
            KernelKind::Epanechnikov => 1.0 - u * u,
            KernelKind::Box => 1.0,
        }
    }

    /// Lipschitz constant `L_κ` (infinite for the box kernel).
    pub fn lipschitz(&self) -> f64 {
        match self.kind {
            KernelKind::Triangular => 1.0,
            KernelKind::Epanechnikov => 2.0,
            KernelKind::Box => f64::INFINITY,
        }
    }

    /// `V_κ = ∫ κ(‖y‖_∞) dy` over the positive orthant of `R^p`, computed as
    /// `∫₀¹ κ(u) p u^{p−1} du`.
    pub fn v_ker(&self, p: usize) -> f64 {
        let pf = p as f64;
        let f = |u: f64| self.eval(u) * pf * math::powi(u, p as i32 - 1);
        adaptive_simpson(&f, 0.0, 1.0, 1e-13, 40)
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let diff = left + right - whole;
    if depth == 0 || math::abs(diff) <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_kernel_volume_is_one() {
        assert!((Kernel::boxcar().v_ker(2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn triangular_closed_form() {
        for p in 1..=6 {
            let v = Kernel::triangular().v_ker(p);
            assert!((v - 1.0 / (p as f64 + 1.0)).abs() < 1e-8, "p={p} v={v}");
        }
    }

    #[test]
    fn epanechnikov_closed_form() {
        // ∫ (1 − u²) p u^{p−1} = 1 − p/(p+2)
        for p in 1..=4 {
            let pf = p as f64;
            let v = Kernel::epanechnikov().v_ker(p);
            assert!((v - (1.0 - pf / (pf + 2.0))).abs() < 1e-8);
        }
    }

    #[test]
    fn profiles_vanish_outside_support() {
        for k in [Kernel::triangular(), Kernel::epanechnikov(), Kernel::boxcar()] {
            assert_eq!(k.eval(1.0001), 0.0);
            assert!(k.eval(0.0) <= 1.0);
        }
    }

    #[test]
    fn lipschitz_constants_hold() {
        for k in [Kernel::triangular(), Kernel::epanechnikov()] {
            for i in 0..200 {
                let u = i as f64 / 150.0;
                let v = u + 0.003;
                assert!((k.eval(u) - k.eval(v)).abs() <= k.lipschitz() * 0.003 + 1e-15);
            }
        }
    }
}
