//! Logarithmic velocity transform `T_v(Q) = sign(Q)/k_v · ln(1 + 4|Q|/(πD²))`.

use std::f64::consts::PI;

fn area(d: f64) -> f64 {
    PI * d * d / 4.0
}

pub fn velocity_transform(q: f64, d: f64, k_v: f64) -> f64 {
    if q == 0.0 {
        return 0.0;
    }
    q.signum() * (q.abs() / area(d)).ln_1p() / k_v
}

pub fn velocity_transform_inv(v: f64, d: f64, k_v: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    v.signum() * area(d) * (k_v * v.abs()).exp_m1()
}

/// `d T_v⁻¹ / dv`, continuous through `v = 0`.
pub fn velocity_transform_inv_derivative(v: f64, d: f64, k_v: f64) -> f64 {
    area(d) * k_v * (k_v * v.abs()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_maps_to_zero() {
        assert_eq!(velocity_transform(0.0, 6.0, 5.0), 0.0);
        assert_eq!(velocity_transform_inv(0.0, 6.0, 5.0), 0.0);
    }

    #[test]
    fn odd_function() {
        for q in [1e-3, 2.5, 4e5, 7e7] {
            assert_eq!(velocity_transform(-q, 8.0, 5.0), -velocity_transform(q, 8.0, 5.0));
        }
    }
}
