//! Reference signal generators.

use trajopt_core::ocp::Vector;

/// Cubic smoothstep `3s^2 - 2s^3` on `[0, 1]` and its derivative.
fn smoothstep(s: f64) -> (f64, f64) {
    let s = s.clamp(0.0, 1.0);
    (s * s * (3.0 - 2.0 * s), 6.0 * s * (1.0 - s))
}

/// Swing reference for `steps` samples of period `delta`.
///
/// For each `(angle, rate)` index pair the angle moves from `+amplitude_deg`
/// to `-amplitude_deg` along a cubic smoothstep over the middle half of the
/// horizon and the rate is its time derivative. All other states and all
/// inputs are zero.
pub fn make_swing_reference(
    steps: usize,
    delta: f64,
    state_dim: usize,
    input_dim: usize,
    angle_pairs: &[(usize, usize)],
    amplitude_deg: f64,
) -> (Vec<Vector>, Vec<Vector>) {
    let amplitude = amplitude_deg.to_radians();
    let duration = steps as f64 * delta;
    let (start, span) = (0.25 * duration, 0.5 * duration);
    let x_ref = (0..=steps)
        .map(|k| {
            let (s, ds) = smoothstep((k as f64 * delta - start) / span);
            let mut x = Vector::zeros(state_dim);
            for &(angle, rate) in angle_pairs {
                x[angle] = amplitude * (1.0 - 2.0 * s);
                x[rate] = -2.0 * amplitude * ds / span;
            }
            x
        })
        .collect();
    (x_ref, vec![Vector::zeros(input_dim); steps])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn swing_endpoints() {
        let (x, u) = make_swing_reference(200, 0.05, 8, 2, &[(0, 1), (4, 5)], 30.0);
        assert!((x[0][0] - 0.5235987755982988).abs() < 1e-15);
        assert!((x[200][4] + 30f64.to_radians()).abs() < 1e-15);
        assert_eq!(x[0][1], 0.0);
        assert!(x[100][0].abs() < 1e-15);
        assert!(x.iter().all(|x| x[2] == 0.0 && x[3] == 0.0));
        assert!(u.iter().all(|u| u.amax() == 0.0));
    }

    #[test]
    fn rate_is_derivative_of_angle() {
        // Away from the two points where the profile's curvature jumps, the
        // central-difference error is bounded by max|angle'''| delta^2 / 6
        // with max|angle'''| = 24 A / span^3.
        let amplitude = 30f64.to_radians();
        for delta in [0.05, 0.025, 0.0125] {
            let steps = (10.0f64 / delta).round() as usize;
            let (x, _) = make_swing_reference(steps, delta, 2, 1, &[(0, 1)], 30.0);
            let err = (1..steps)
                .filter(|&k| {
                    let t = k as f64 * delta;
                    (t - 2.5).abs() > 1.5 * delta && (t - 7.5).abs() > 1.5 * delta
                })
                .map(|k| ((x[k + 1][0] - x[k - 1][0]) / (2.0 * delta) - x[k][1]).abs())
                .fold(0.0, f64::max);
            let bound = 24.0 * amplitude / 125.0 / 6.0 * delta * delta;
            assert!(err <= bound * (1.0 + 1e-6) + 1e-13, "{delta}: {err:e} > {bound:e}");
        }
    }
}
