//! Rigid-body motions in 2D: two translations and the rotation `(x2, -x1)`.
//!
//! The rotation is taken about a reference point and scaled by a length so
//! that the three modes have comparable magnitude on a patch.

use crate::mesh::Point;

/// Values of the three modes at `x`, rotation relative to `origin` over `scale`.
pub fn rigid_body_modes(x: &Point, origin: &Point, scale: f64) -> [[f64; 2]; 3] {
    let d = (x - origin) / scale;
    [[1.0, 0.0], [0.0, 1.0], [d.y, -d.x]]
}

/// Gradients `[dz0/dx, dz0/dy, dz1/dx, dz1/dy]` of the three modes.
pub fn rigid_body_gradients(scale: f64) -> [[f64; 4]; 3] {
    [[0.0; 4], [0.0; 4], [0.0, 1.0 / scale, -1.0 / scale, 0.0]]
}

////////////////////////////////////////////////////////////////////////////////

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_gradient_vanishes() {
        let origin = Point::new(0.3, -0.2);
        for (k, x) in [Point::new(0.1, 0.9), Point::new(-2.0, 5.0), Point::new(7.0, 0.0)].iter().enumerate() {
            let scale = 0.5 + k as f64;
            let g = rigid_body_gradients(scale);
            // finite differences agree with the analytic gradient
            let eps = 1e-6;
            for m in 0..3 {
                let fx = |p: Point| rigid_body_modes(&p, &origin, scale)[m];
                let dx = (fx(x + Point::new(eps, 0.0))[0] - fx(x - Point::new(eps, 0.0))[0]) / (2.0 * eps);
                assert!((dx - g[m][0]).abs() < 1e-9);
                let sym = [g[m][0], g[m][3], 0.5 * (g[m][1] + g[m][2])];
                assert!(sym.iter().all(|v| v.abs() <= 1e-14));
            }
        }
    }

    #[test]
    fn three_modes() {
        let z = rigid_body_modes(&Point::new(1.0, 2.0), &Point::zeros(), 1.0);
        assert_eq!(z.len(), 3);
        assert_eq!(z[2], [2.0, -1.0]);
    }
}
