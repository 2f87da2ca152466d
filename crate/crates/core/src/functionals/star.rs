//! The interpolation inequality `‖v‖_{4/3} ≤ 4 ‖v‖₂^{6/7} I_r^{3/28}` on `(-r, r)`,
//! where `I_r = ∫ (r - |x|)₊² |v|^{4/3} dx`.

use serde::Serialize;

/// Multiplicative quadrature slack.
pub const STAR_SLACK: f64 = 1.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StarReport {
    pub norm_43: f64,
    pub norm_2: f64,
    pub i_r: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// `v` holds midpoint samples on a uniform partition of `(-r, r)`.
pub fn star_inequality_check(v: &[f64], r: f64) -> StarReport {
    let n = v.len();
    let dx = 2.0 * r / n as f64;
    let (mut s43, mut s2, mut ir) = (0.0, 0.0, 0.0);
    for (i, &vi) in v.iter().enumerate() {
        let x = -r + (i as f64 + 0.5) * dx;
        let a = vi.abs().powf(4.0 / 3.0);
        let h = (r - x.abs()).max(0.0);
        s43 += a;
        s2 += vi * vi;
        ir += h * h * a;
    }
    let norm_43 = (s43 * dx).powf(0.75);
    let norm_2 = (s2 * dx).sqrt();
    let i_r = ir * dx;
    let lhs = norm_43;
    let rhs = 4.0 * norm_2.powf(6.0 / 7.0) * i_r.powf(3.0 / 28.0);
    StarReport {
        norm_43,
        norm_2,
        i_r,
        lhs,
        rhs,
        pass: lhs <= STAR_SLACK * rhs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_passes() {
        let rep = star_inequality_check(&[0.0; 50], 1.0);
        assert_eq!(rep.lhs, 0.0);
        assert_eq!(rep.rhs, 0.0);
        assert!(rep.pass);
    }

    #[test]
    fn constant_one() {
        let rep = star_inequality_check(&vec![1.0; 20000], 1.0);
        assert!((rep.lhs - 2f64.powf(0.75)).abs() < 1e-12);
        let exact = 4.0 * 2f64.powf(3.0 / 7.0) * (2.0f64 / 3.0).powf(3.0 / 28.0);
        assert!((exact - 5.154).abs() < 1e-3);
        assert!((rep.rhs - exact).abs() < 1e-6);
        assert!(rep.pass);
    }

    proptest! {
        #[test]
        fn scale_invariance(k in 0.1f64..10.0) {
            // Both sides are 1-homogeneous in v.
            let v: Vec<f64> = (0..200).map(|i| ((i * 37 % 11) as f64) - 5.0).collect();
            let a = star_inequality_check(&v, 1.5);
            let b = star_inequality_check(&v.iter().map(|x| k * x).collect::<Vec<_>>(), 1.5);
            prop_assert!((b.lhs / a.lhs - k).abs() < 1e-10 * k);
            prop_assert!((b.rhs / a.rhs - k).abs() < 1e-10 * k);
        }
    }
}
