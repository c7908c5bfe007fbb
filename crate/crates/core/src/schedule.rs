//! Slowly varying exterior field `h_ext(t, x) = lambda(t) chi(x) u(t)`.

use alloc::format;
use alloc::vec::Vec;

// unused when std float methods are in scope (test builds)
#[allow(unused_imports)]
use num_traits::Float;

use crate::grid::{DomainMask, Grid3, VectorField};
use crate::{Error, Result, Vec3};

/// Direction of the applied field.
#[derive(Debug, Clone, PartialEq)]
pub enum DirectionPath {
    Fixed(Vec3),
    /// Great-circle rotation starting at `start`, turning toward `toward`
    /// at angular rate `rate` (rad per unit time).
    Rotating { start: Vec3, toward: Vec3, rate: f64 },
}

/// Spatial profile `chi(x)` with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Envelope {
    Uniform,
    /// `exp(1 - 1/(1 - r^2/R^2))` inside the ball of radius `R`, zero outside.
    RadialBump { center: Vec3, radius: f64 },
}

impl Envelope {
    pub fn value(&self, x: &Vec3) -> f64 {
        match self {
            Envelope::Uniform => 1.0,
            Envelope::RadialBump { center, radius } => {
                let s = (x - center).norm_squared() / (radius * radius);
                if s < 1.0 {
                    (1.0 - 1.0 / (1.0 - s)).exp()
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSchedule {
    knots: Vec<(f64, f64)>,
    direction: DirectionPath,
    /// Orthonormal rotation plane for `Rotating`, unused otherwise.
    plane: (Vec3, Vec3),
    envelope: Envelope,
}

impl FieldSchedule {
    /// Piecewise-linear amplitude through `knots` (strictly increasing times).
    /// A single knot means a constant amplitude for all times.
    pub fn new(knots: Vec<(f64, f64)>, direction: DirectionPath, envelope: Envelope) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidSchedule("at least one knot is required".into()));
        }
        if knots.iter().any(|(t, l)| !t.is_finite() || !l.is_finite()) {
            return Err(Error::InvalidSchedule("knots must be finite".into()));
        }
        if let Some(w) = knots.windows(2).find(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidSchedule(format!(
                "knot times must be strictly increasing ({} then {})",
                w[0].0, w[1].0
            )));
        }
        let plane = match &direction {
            DirectionPath::Fixed(u) => {
                let n = u.norm();
                if !(n > 0.0) {
                    return Err(Error::InvalidSchedule("direction must be nonzero".into()));
                }
                (u / n, Vec3::zeros())
            }
            DirectionPath::Rotating { start, toward, rate } => {
                if !rate.is_finite() {
                    return Err(Error::InvalidSchedule("rotation rate must be finite".into()));
                }
                let a = start.try_normalize(0.0).ok_or_else(|| Error::InvalidSchedule("start direction must be nonzero".into()))?;
                let b = toward - a * a.dot(toward);
                let b = b
                    .try_normalize(1e-12 * toward.norm())
                    .ok_or_else(|| Error::InvalidSchedule("rotation target is parallel to the start direction".into()))?;
                (a, b)
            }
        };
        if let Envelope::RadialBump { radius, .. } = envelope {
            if !(radius > 0.0) {
                return Err(Error::InvalidSchedule("envelope radius must be positive".into()));
            }
        }
        Ok(Self {
            knots,
            direction,
            plane,
            envelope,
        })
    }

    /// Constant amplitude along a fixed direction, uniform in space.
    pub fn constant(lambda: f64, direction: Vec3) -> Result<Self> {
        Self::new(alloc::vec![(0.0, lambda)], DirectionPath::Fixed(direction), Envelope::Uniform)
    }

    /// Triangular sweep `+A -> -A -> +A` with the given period, repeated `cycles` times.
    pub fn triangular_sweep(amplitude: f64, period: f64, cycles: usize, direction: Vec3) -> Result<Self> {
        let mut knots = alloc::vec![(0.0, amplitude)];
        for c in 0..cycles.max(1) {
            let t0 = c as f64 * period;
            knots.push((t0 + 0.5 * period, -amplitude));
            knots.push((t0 + period, amplitude));
        }
        Self::new(knots, DirectionPath::Fixed(direction), Envelope::Uniform)
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn direction_path(&self) -> &DirectionPath {
        &self.direction
    }

    pub fn envelope(&self) -> &Envelope {
        &self.envelope
    }

    /// Knot-time range, `None` for a constant (single-knot) schedule.
    pub fn time_range(&self) -> Option<(f64, f64)> {
        (self.knots.len() > 1).then(|| (self.knots[0].0, self.knots[self.knots.len() - 1].0))
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if let Some((start, end)) = self.time_range() {
            if !(t >= start && t <= end) {
                return Err(Error::OutOfRange { t, start, end });
            }
        }
        Ok(())
    }

    /// Segment index `s` with `knots[s].0 <= t < knots[s+1].0`; the last
    /// segment also owns the final knot.
    fn segment(&self, t: f64) -> usize {
        let n = self.knots.len();
        let s = self.knots.partition_point(|&(tk, _)| tk <= t);
        s.saturating_sub(1).min(n - 2)
    }

    pub fn amplitude(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        if self.knots.len() == 1 {
            return Ok(self.knots[0].1);
        }
        let s = self.segment(t);
        let (t0, l0) = self.knots[s];
        let (t1, l1) = self.knots[s + 1];
        if t == t1 {
            return Ok(l1);
        }
        Ok(l0 + (l1 - l0) * (t - t0) / (t1 - t0))
    }

    /// Slope of the amplitude; right derivative at interior knots, left at the last.
    pub fn amplitude_rate(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        if self.knots.len() == 1 {
            return Ok(0.0);
        }
        let s = self.segment(t);
        let (t0, l0) = self.knots[s];
        let (t1, l1) = self.knots[s + 1];
        Ok((l1 - l0) / (t1 - t0))
    }

    pub fn direction(&self, t: f64) -> Vec3 {
        match self.direction {
            DirectionPath::Fixed(_) => self.plane.0,
            DirectionPath::Rotating { rate, .. } => {
                let (a, b) = self.plane;
                let th = rate * t;
                a * th.cos() + b * th.sin()
            }
        }
    }

    pub fn direction_rate(&self, t: f64) -> Vec3 {
        match self.direction {
            DirectionPath::Fixed(_) => Vec3::zeros(),
            DirectionPath::Rotating { rate, .. } => {
                let (a, b) = self.plane;
                let th = rate * t;
                (b * th.cos() - a * th.sin()) * rate
            }
        }
    }

    /// Spatially uniform part `lambda(t) u(t)`.
    pub fn vector(&self, t: f64) -> Result<Vec3> {
        Ok(self.direction(t) * self.amplitude(t)?)
    }

    /// `d/dt [lambda(t) u(t)]`.
    pub fn vector_rate(&self, t: f64) -> Result<Vec3> {
        Ok(self.direction(t) * self.amplitude_rate(t)? + self.direction_rate(t) * self.amplitude(t)?)
    }
}

/// `h_ext(t)` sampled at the centres of the masked cells.
pub fn eval_h_ext(s: &FieldSchedule, t: f64, grid: &Grid3, mask: &DomainMask) -> Result<VectorField> {
    let v = s.vector(t)?;
    Ok(match s.envelope {
        Envelope::Uniform => VectorField::uniform(mask, v),
        ref env => VectorField::from_fn(grid, mask, |x| v * env.value(&x)),
    })
}

/// Exact time derivative of `h_ext` (one-sided at knots).
pub fn d_dt_h_ext(s: &FieldSchedule, t: f64, grid: &Grid3, mask: &DomainMask) -> Result<VectorField> {
    let v = s.vector_rate(t)?;
    Ok(match s.envelope {
        Envelope::Uniform => VectorField::uniform(mask, v),
        ref env => VectorField::from_fn(grid, mask, |x| v * env.value(&x)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn macro_cell() -> (Grid3, DomainMask) {
        let g = Grid3::single_cell(1.0).unwrap();
        let m = DomainMask::full(&g);
        (g, m)
    }

    #[test]
    fn linear_interpolation() {
        let (g, m) = macro_cell();
        let s = FieldSchedule::new(vec![(0.0, 0.0), (1.0, 2.0)], DirectionPath::Fixed(Vec3::z()), Envelope::Uniform).unwrap();
        assert_eq!(eval_h_ext(&s, 0.5, &g, &m).unwrap()[0], Vec3::z());
        assert_eq!(d_dt_h_ext(&s, 0.3, &g, &m).unwrap()[0], Vec3::z() * 2.0);
        assert!(matches!(eval_h_ext(&s, 1.5, &g, &m), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn constant_amplitude() {
        let (g, m) = macro_cell();
        let s = FieldSchedule::constant(3.0, Vec3::x()).unwrap();
        assert_eq!(eval_h_ext(&s, 0.1, &g, &m).unwrap(), eval_h_ext(&s, 17.0, &g, &m).unwrap());
        assert_eq!(d_dt_h_ext(&s, 2.0, &g, &m).unwrap()[0], Vec3::zeros());
    }

    #[test]
    fn triangular_apex_and_knot_derivatives() {
        let s = FieldSchedule::new(vec![(0.0, -2.0), (1.0, 2.0), (2.0, -2.0)], DirectionPath::Fixed(Vec3::z()), Envelope::Uniform)
            .unwrap();
        assert_eq!(s.amplitude(1.0).unwrap(), 2.0);
        assert_eq!(s.amplitude_rate(1.0).unwrap(), -4.0);
        assert_eq!(s.amplitude_rate(2.0).unwrap(), -4.0);
        assert_eq!(s.amplitude_rate(0.0).unwrap(), 4.0);
    }

    #[test]
    fn rotating_direction_rate() {
        let omega = 0.7;
        let lambda = 3.0;
        let s = FieldSchedule::new(
            vec![(0.0, lambda)],
            DirectionPath::Rotating {
                start: Vec3::z(),
                toward: Vec3::new(1.0, 0.0, 1.0),
                rate: omega,
            },
            Envelope::Uniform,
        )
        .unwrap();
        for &t in &[0.0, 0.4, 2.3] {
            let d = s.vector_rate(t).unwrap();
            assert!((d.norm() - lambda * omega).abs() < 1e-12);
            assert!((s.direction(t).norm() - 1.0).abs() < 1e-15);
            let h = 1e-4;
            let fd = (s.vector(t + h).unwrap() - s.vector(t - h).unwrap()) / (2.0 * h);
            assert!((fd - d).norm() < 1e-6);
        }
        assert_eq!(s.direction(0.0), Vec3::z());
    }

    #[test]
    fn envelope_bounds() {
        let env = Envelope::RadialBump { center: Vec3::zeros(), radius: 1.0 };
        assert_eq!(env.value(&Vec3::zeros()), 1.0);
        assert_eq!(env.value(&Vec3::new(1.0, 0.0, 0.0)), 0.0);
        let v = env.value(&Vec3::new(0.5, 0.0, 0.0));
        assert!(v > 0.0 && v < 1.0);
    }

    #[test]
    fn rejects_bad_knots() {
        let r = FieldSchedule::new(vec![(0.0, 1.0), (0.0, 2.0)], DirectionPath::Fixed(Vec3::z()), Envelope::Uniform);
        assert!(matches!(r, Err(Error::InvalidSchedule(_))));
        let r = FieldSchedule::new(
            vec![(0.0, 1.0)],
            DirectionPath::Rotating { start: Vec3::z(), toward: Vec3::z() * 2.0, rate: 1.0 },
            Envelope::Uniform,
        );
        assert!(r.is_err());
    }
}
