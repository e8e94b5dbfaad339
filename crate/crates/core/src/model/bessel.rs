//! Bessel functions of the first kind, `J_m(x)` for integer order.
//!
//! Miller's backward recurrence normalised with `J₀ + 2 Σ J₂ₖ = 1`. The
//! recurrence starts far enough above `max(m, |x|)` that the truncation error
//! is below double precision for the argument range used here (|x| ≲ 100).

/// First positive zero of `J₀`.
pub const J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;

/// `J_m(x)` for any integer order `m` and real `x`.
pub fn bessel_j(m: i32, x: f64) -> f64 {
    let order = m.unsigned_abs();
    let mut value = bessel_j_nonneg(order, x.abs());
    // J₋ₘ = (−1)ᵐ Jₘ and Jₘ(−x) = (−1)ᵐ Jₘ(x)
    if m < 0 && order % 2 == 1 {
        value = -value;
    }
    if x < 0.0 && order % 2 == 1 {
        value = -value;
    }
    value
}

/// `J_0(x), …, J_{max_order}(x)` from a single recurrence sweep.
pub fn bessel_j_all(max_order: u32, x: f64) -> Vec<f64> {
    let ax = x.abs();
    let mut out = if ax == 0.0 {
        let mut v = vec![0.0; max_order as usize + 1];
        v[0] = 1.0;
        v
    } else {
        miller(max_order, ax)
    };
    if x < 0.0 {
        for (k, v) in out.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

fn bessel_j_nonneg(order: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if order == 0 { 1.0 } else { 0.0 };
    }
    miller(order, x)[order as usize]
}

fn miller(max_order: u32, x: f64) -> Vec<f64> {
    const RESCALE: f64 = 1e250;
    let top = f64::max(max_order as f64, x);
    let mut start = (top + 30.0 + 10.0 * top.cbrt()).ceil() as usize;
    start += start % 2;

    let mut out = vec![0.0; max_order as usize + 1];
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-300; // J_k, arbitrary seed
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        // J_{k-1} = (2k/x) J_k − J_{k+1}
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        let idx = k - 1;
        if idx <= max_order as usize {
            out[idx] = cur;
        }
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            next /= RESCALE;
            norm /= RESCALE;
            for v in out.iter_mut() {
                *v /= RESCALE;
            }
        }
    }
    // `cur` is now J₀.
    norm += cur;
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const XS: [f64; 10] = [0.1, 0.5, 1.0, J0_FIRST_ZERO, 3.0, 5.0, 7.5, 10.0, 15.0, 25.0];

    // Reference values (scipy.special.jv), frozen.
    const TABLE: [(i32, [f64; 10]); 7] = [
        (0, [0.9975015620660401, 0.938469807240813, 0.7651976865579666, 0.0, -0.2600519549019334, -0.17759677131433835, 0.26633965788037844, -0.24593576445134832, -0.014224472826780745, 0.09626678327595811]),
        (1, [0.049937526036242005, 0.2422684576748739, 0.44005058574493355, 0.5191474972894667, 0.33905895852593626, -0.3275791375914652, 0.13524842757970548, 0.0434727461688616, 0.20510403861352275, -0.1253502495802899]),
        (2, [0.0012489586587999192, 0.030604023458682638, 0.1149034849319005, 0.43175480701968055, 0.4860912605858912, 0.04656511627775229, -0.23027341052579028, 0.2546303136851206, 0.041571677975250444, -0.10629480324238133]),
        (3, [2.0820315754756272e-05, 0.002563729994587244, 0.019563353982668414, 0.19899990535769085, 0.3090627222552516, 0.364831230613667, -0.2580609131934603, 0.05837937930518667, -0.19401825782012266, 0.10834308106150892]),
        (4, [2.6028648545684057e-07, 0.00016073647636428756, 0.002476638964109955, 0.06474666616417797, 0.13203418392461216, 0.3912323604586482, 0.023824679971022042, -0.21960268610200864, -0.11917898110329951, 0.13229714269714343]),
        (5, [2.603081790964442e-09, 8.053627241357477e-06, 0.00024975773021123466, 0.016389243204805858, 0.043028434877047585, 0.26114054612017007, 0.28347390516255044, -0.2340615281867936, 0.13045613456502958, -0.06600799539842298]),
        (6, [2.169363960375998e-11, 3.360684628618851e-07, 2.093833800238929e-05, 0.003404818472027835, 0.011393932332213062, 0.13104873178169202, 0.3541405269123786, -0.014458842084784946, 0.2061497374799859, -0.15870034085651263]),
    ];

    /// Independent route: `J_m(x) = (1/2π) ∫₀^{2π} cos(mτ − x sin τ) dτ`.
    /// The integrand is smooth and periodic, so the trapezoid rule converges
    /// geometrically.
    pub(crate) fn bessel_quadrature(m: i32, x: f64) -> f64 {
        let n = 4096;
        let h = 2.0 * std::f64::consts::PI / n as f64;
        (0..n).map(|k| (m as f64 * k as f64 * h - x * (k as f64 * h).sin()).cos()).sum::<f64>() / n as f64
    }

    #[test]
    fn matches_reference_table() {
        for (m, row) in TABLE {
            for (x, expect) in XS.iter().zip(row) {
                let got = bessel_j(m, *x);
                assert!((got - expect).abs() < 1e-12, "J_{m}({x}) = {got}, want {expect}");
            }
        }
    }

    #[test]
    fn matches_quadrature() {
        for m in 0..8 {
            for k in 0..=40 {
                let x = 0.25 * k as f64;
                let diff = (bessel_j(m, x) - bessel_quadrature(m, x)).abs();
                assert!(diff < 1e-13, "m={m} x={x}: {diff}");
            }
        }
    }

    #[test]
    fn recurrence_cross_checked_with_quadrature() {
        for m in 1..7 {
            for k in 1..=40 {
                let x = 0.25 * k as f64;
                let lhs = bessel_j(m - 1, x) + bessel_j(m + 1, x);
                let rhs = 2.0 * m as f64 / x * bessel_quadrature(m, x);
                assert!((lhs - rhs).abs() < 1e-12, "m={m} x={x}");
            }
        }
    }

    #[test]
    fn symmetries_and_origin() {
        assert_eq!(bessel_j(0, 0.0), 1.0);
        assert_eq!(bessel_j(3, 0.0), 0.0);
        assert!((bessel_j(-3, 2.0) + bessel_j(3, 2.0)).abs() < 1e-16);
        assert!((bessel_j(-2, 2.0) - bessel_j(2, 2.0)).abs() < 1e-16);
        assert!((bessel_j(1, -2.0) + bessel_j(1, 2.0)).abs() < 1e-16);
        assert!(bessel_j(0, J0_FIRST_ZERO).abs() < 1e-15);
    }

    #[test]
    fn all_orders_agree_with_single() {
        let all = bessel_j_all(6, 7.5);
        for (m, v) in all.iter().enumerate() {
            assert_eq!(*v, bessel_j(m as i32, 7.5));
        }
    }

    #[test]
    fn sum_of_squares_is_one() {
        for x in [0.3, 2.0, 9.0] {
            let s: f64 = (-60..=60).map(|m| bessel_j(m, x).powi(2)).sum();
            assert!((s - 1.0).abs() < 1e-13);
        }
    }
}
