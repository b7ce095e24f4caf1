use std::f64::consts::PI;

use crate::error::{NvError, Result};

/// `u(t, x, y) = c·ũ(c^{3/2} t, √c (x − ct), √c y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comoving {
    c: f64,
}

pub fn comoving_transform(c: f64) -> Result<Comoving> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(NvError::Domain(format!("soliton speed must be positive, got {c}")));
    }
    Ok(Comoving { c })
}

impl Comoving {
    pub fn speed(&self) -> f64 {
        self.c
    }

    pub fn amplitude(&self) -> f64 {
        self.c
    }

    /// Physical `(t, x, y)` to frame coordinates.
    pub fn to_frame(&self, t: f64, x: f64, y: f64) -> (f64, f64, f64) {
        let s = self.c.sqrt();
        (self.c * s * t, s * (x - self.c * t), s * y)
    }

    pub fn from_frame(&self, tt: f64, xt: f64, yt: f64) -> (f64, f64, f64) {
        let s = self.c.sqrt();
        let t = tt / (self.c * s);
        (t, xt / s + self.c * t, yt / s)
    }

    /// Physical transverse wavenumber of a frame wavenumber.
    pub fn wavenumber(&self, k: f64) -> f64 {
        k * self.c.sqrt()
    }

    /// Physical y-period `2π/(k√c)`.
    pub fn period_y(&self, k: f64) -> f64 {
        2.0 * PI / self.wavenumber(k)
    }

    /// Physical growth rate of a frame rate.
    pub fn growth_rate(&self, gamma: f64) -> f64 {
        gamma * self.c.powf(1.5)
    }

    /// Physical field built from a frame field.
    pub fn field<F: Fn(f64, f64, f64) -> f64>(&self, frame: F) -> impl Fn(f64, f64, f64) -> f64 {
        let this = *self;
        move |t, x, y| {
            let (tt, xt, yt) = this.to_frame(t, x, y);
            this.c * frame(tt, xt, yt)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planar::kdv_soliton;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unit_speed_is_identity() {
        let m = comoving_transform(1.0).unwrap();
        let (t, x, y) = m.to_frame(0.3, 2.0, -1.0);
        assert_eq!((t, x, y), (0.3, 1.7, -1.0));
        assert_eq!(m.period_y(0.5), 4.0 * PI);
    }

    #[test]
    fn period_halves_at_speed_four() {
        let m = comoving_transform(4.0).unwrap();
        assert_abs_diff_eq!(m.period_y(0.504), PI / 0.504, epsilon = 1e-14);
        assert_abs_diff_eq!(m.growth_rate(0.1), 0.8, epsilon = 1e-15);
        let (t, x, y) = m.from_frame(1.0, 2.0, 3.0);
        let back = m.to_frame(t, x, y);
        assert_abs_diff_eq!(back.0, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(back.1, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(back.2, 3.0, epsilon = 1e-14);
    }

    #[test]
    fn maps_unit_soliton_to_speed_c() {
        let unit = |_t: f64, x: f64, _y: f64| -2.0 / x.cosh().powi(2);
        for c in [0.5, 2.0, 4.0] {
            let m = comoving_transform(c).unwrap();
            let u = m.field(unit);
            let s = kdv_soliton(c, 0.0).unwrap();
            for (t, x) in [(0.0, 0.3), (1.5, 2.0), (0.7, -1.0)] {
                assert_abs_diff_eq!(u(t, x, 0.4), s.u(x, t), epsilon = 1e-13);
            }
        }
        assert!(comoving_transform(0.0).is_err());
    }
}
