//! Park projection between three-phase (abc) quantities and the rotating dq frame.

use std::f64::consts::PI;

const SHIFT: f64 = 2.0 * PI / 3.0;

/// Project an abc triple onto the dq axes with the amplitude-invariant 2/3 scaling.
pub fn dq_transform(abc: [f64; 3], theta: f64) -> [f64; 2] {
    let angles = [theta, theta - SHIFT, theta + SHIFT];
    let mut d = 0.0;
    let mut q = 0.0;
    for (x, a) in abc.iter().zip(angles) {
        d += x * a.cos();
        q += x * a.sin();
    }
    [2.0 / 3.0 * d, 2.0 / 3.0 * q]
}

/// Map a dq pair back to the zero-sum abc triple it came from.
pub fn inverse_dq_transform(dq: [f64; 2], theta: f64) -> [f64; 3] {
    let angles = [theta, theta - SHIFT, theta + SHIFT];
    angles.map(|a| dq[0] * a.cos() + dq[1] * a.sin())
}

/// Frame angle at sample `k` for a constant grid frequency.
pub fn frame_angle(omega: f64, ts: f64, k: usize) -> f64 {
    omega * ts * k as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_sequence_vanishes() {
        for theta in [0.0, 0.3, 2.0, -4.1] {
            let dq = dq_transform([1.0, 1.0, 1.0], theta);
            assert!(dq[0].abs() < 1e-15 && dq[1].abs() < 1e-15);
        }
    }

    #[test]
    fn balanced_cosines_map_to_unit_d_axis() {
        let theta: f64 = 0.7;
        let abc = [theta.cos(), (theta - SHIFT).cos(), (theta + SHIFT).cos()];
        let dq = dq_transform(abc, theta);
        assert!((dq[0] - 1.0).abs() < 1e-12);
        assert!(dq[1].abs() < 1e-12);
    }

    #[test]
    fn inverse_lands_on_zero_sum_subspace() {
        let abc = inverse_dq_transform([3.0, -1.5], 1.1);
        assert!((abc[0] + abc[1] + abc[2]).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn dq_round_trip(d in -1e3f64..1e3, q in -1e3f64..1e3, theta in -10.0f64..10.0) {
            let back = dq_transform(inverse_dq_transform([d, q], theta), theta);
            prop_assert!((back[0] - d).abs() <= 1e-12 * (1.0 + d.abs()));
            prop_assert!((back[1] - q).abs() <= 1e-12 * (1.0 + q.abs()));
        }

        #[test]
        fn zero_sum_round_trip(a in -10.0f64..10.0, b in -10.0f64..10.0, theta in -10.0f64..10.0) {
            let abc = [a, b, -a - b];
            let back = inverse_dq_transform(dq_transform(abc, theta), theta);
            for i in 0..3 {
                prop_assert!((back[i] - abc[i]).abs() < 1e-12);
            }
        }
    }
}
