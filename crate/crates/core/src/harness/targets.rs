use std::fmt;
use std::sync::Arc;

use crate::beta::BetaParams;
use crate::static_sbp::DeltaMode;

type Evaluator = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A success-probability function on `[0, 1]^dim`, clipped to `[0, 1]`.
#[derive(Clone)]
pub struct TargetFunction {
    name: String,
    dim: usize,
    eval: Arc<Evaluator>,
    lipschitz_hint: Option<f64>,
}

impl fmt::Debug for TargetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetFunction")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("lipschitz_hint", &self.lipschitz_hint)
            .finish()
    }
}

impl TargetFunction {
    pub fn new<F>(name: impl Into<String>, dim: usize, eval: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            dim,
            eval: Arc::new(eval),
            lipschitz_hint: None,
        }
    }

    pub fn with_lipschitz_hint(mut self, l: f64) -> Self {
        self.lipschitz_hint = Some(l);
        self
    }

    pub fn constant(dim: usize, p: f64) -> Self {
        Self::new(format!("constant({p})"), dim, move |_| p).with_lipschitz_hint(0.0)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lipschitz_hint(&self) -> Option<f64> {
        self.lipschitz_hint
    }

    /// Scheduled `Δ` using the hint as Lipschitz constant, or `L = 1` without one.
    pub fn scheduled_mode(&self) -> DeltaMode {
        let lipschitz = self.lipschitz_hint.filter(|&l| l > 0.0).unwrap_or(1.0);
        DeltaMode::Scheduled { lipschitz }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x).clamp(0.0, 1.0)
    }
}

/// Upper bound on `|f'|` for [`synth_1d`].
pub const SYNTH_1D_LIPSCHITZ: f64 = 3.03;

/// `f(x) = Beta(x; 7, 3)/8 + Beta(x; 3, 7)/6 + 0.2`.
pub fn synth_1d() -> TargetFunction {
    let hi = BetaParams {
        alpha: 7.0,
        beta: 3.0,
    };
    let lo = BetaParams {
        alpha: 3.0,
        beta: 7.0,
    };
    TargetFunction::new("synth_1d", 1, move |x| {
        hi.pdf(x[0]) / 8.0 + lo.pdf(x[0]) / 6.0 + 0.2
    })
    .with_lipschitz_hint(SYNTH_1D_LIPSCHITZ)
}

/// Bump width parameter of [`synth_2d`] (variance of each radial bump).
pub const SYNTH_2D_SIGMA: f64 = 0.025;

/// Upper bound on the largest partial derivative of [`synth_2d`].
pub const SYNTH_2D_LIPSCHITZ: f64 = 3.88;

/// Three unnormalized radial bumps `exp(−‖x − μ‖² / (2σ))`, `σ = 0.025`,
/// centered at (0.75, 0.75), (0.6, 0.3) and (0.25, 0.6).
pub fn synth_2d() -> TargetFunction {
    const CENTERS: [[f64; 2]; 3] = [[0.75, 0.75], [0.6, 0.3], [0.25, 0.6]];
    TargetFunction::new("synth_2d", 2, |x| {
        CENTERS
            .iter()
            .map(|c| {
                let d2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
                (-d2 / (2.0 * SYNTH_2D_SIGMA)).exp()
            })
            .sum()
    })
    .with_lipschitz_hint(SYNTH_2D_LIPSCHITZ)
}

/// `π(x) = 1 − x`, the most-fatigued success curve of the rehabilitation study.
pub fn fatigued_base() -> TargetFunction {
    TargetFunction::new("fatigued_base", 1, |x| 1.0 - x[0]).with_lipschitz_hint(1.0)
}

/// Evenly spaced grid with `per_axis` points per axis (endpoints included),
/// row-major.
pub fn query_grid(dim: usize, per_axis: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = if per_axis <= 1 {
        vec![0.5]
    } else {
        (0..per_axis)
            .map(|k| k as f64 / (per_axis - 1) as f64)
            .collect()
    };
    let mut grid: Vec<Vec<f64>> = vec![Vec::with_capacity(dim)];
    for _ in 0..dim {
        grid = grid
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_unit;
    use approx::assert_relative_eq;

    #[test]
    fn synth_1d_values() {
        let f = synth_1d();
        assert_eq!(f.eval(&[0.0]), 0.2);
        assert_eq!(f.eval(&[1.0]), 0.2);
        // Both pdfs equal 252/256 at one half.
        let expected = 0.2 + 0.984375 * (1.0 / 8.0 + 1.0 / 6.0);
        assert_relative_eq!(f.eval(&[0.5]), expected, epsilon = 1e-12);
        assert_relative_eq!(f.eval(&[0.5]), 0.487109375, epsilon = 1e-12);
        // Cross-check the pdf normalization behind those values.
        let total = integrate_unit(
            |t, _| {
                BetaParams {
                    alpha: 7.0,
                    beta: 3.0,
                }
                .pdf(t)
            },
            1e-13,
        )
        .unwrap();
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn synth_1d_range() {
        let f = synth_1d();
        let max = (0..=10_000)
            .map(|k| f.eval(&[k as f64 / 10_000.0]))
            .fold(0.0, f64::max);
        assert!(max <= 1.0);
        assert!(max > 0.5);
    }

    #[test]
    fn synth_2d_values() {
        let f = synth_2d();
        assert_eq!(f.eval(&[0.75, 0.75]), 1.0);
        assert!(f.eval(&[1.0, 0.0]) < 0.01);
        // Corner nearest the (0.25, 0.6) bump: e^{-4.45} + e^{-12.5} + e^{-17}.
        let corner = (-4.45f64).exp() + (-12.5f64).exp() + (-17.0f64).exp();
        assert_relative_eq!(f.eval(&[0.0, 1.0]), corner, epsilon = 1e-12);
        for p in query_grid(2, 100) {
            let v = f.eval(&p);
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn lipschitz_hints_are_tight_bounds() {
        let f = synth_1d();
        let h = 1e-5;
        let slope_1d = (0..100_000)
            .map(|k| {
                let x = k as f64 * h;
                ((f.eval(&[x + h]) - f.eval(&[x])) / h).abs()
            })
            .fold(0.0, f64::max);
        assert!(slope_1d <= SYNTH_1D_LIPSCHITZ && slope_1d > SYNTH_1D_LIPSCHITZ - 0.02);

        let g = synth_2d();
        let h = 1e-3;
        let mut slope_2d: f64 = 0.0;
        for i in 0..1000 {
            for j in 0..1000 {
                let (x, y) = (i as f64 * h, j as f64 * h);
                let v = g.eval(&[x, y]);
                slope_2d = slope_2d
                    .max(((g.eval(&[x + h, y]) - v) / h).abs())
                    .max(((g.eval(&[x, y + h]) - v) / h).abs());
            }
        }
        assert!(slope_2d <= SYNTH_2D_LIPSCHITZ && slope_2d > SYNTH_2D_LIPSCHITZ - 0.02);
    }

    #[test]
    fn scheduled_mode_uses_hint() {
        assert_eq!(
            synth_2d().scheduled_mode(),
            DeltaMode::Scheduled {
                lipschitz: SYNTH_2D_LIPSCHITZ
            }
        );
        let plain = TargetFunction::new("plain", 1, |_| 0.5);
        assert_eq!(
            plain.scheduled_mode(),
            DeltaMode::Scheduled { lipschitz: 1.0 }
        );
        assert_eq!(
            TargetFunction::constant(1, 0.3).scheduled_mode(),
            DeltaMode::Scheduled { lipschitz: 1.0 }
        );
    }

    #[test]
    fn grid_layout() {
        let g = query_grid(2, 3);
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], vec![0.0, 0.0]);
        assert_eq!(g[1], vec![0.0, 0.5]);
        assert_eq!(g[8], vec![1.0, 1.0]);
        assert_eq!(query_grid(1, 101).len(), 101);
    }
}
