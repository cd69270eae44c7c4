use std::sync::Arc;

use nilwave::wavelet::band_limited_field;
use nilwave::{
    Calculus, GradedGroup, GridSpec, Multiplier, Profile, RocklandOperator, SampledField, ScaleGrid, Weight, Window,
};

use crate::config::RunConfig;
use crate::error::CliError;

/// Everything a command needs, built and validated from a [`RunConfig`].
pub struct Pipeline {
    pub cfg: RunConfig,
    pub group: Arc<GradedGroup>,
    pub operator: RocklandOperator,
    pub multiplier: Multiplier,
    pub calculus: Arc<Calculus>,
    pub window: Window,
    pub scales: ScaleGrid,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn operator(cfg: &RunConfig, group: &Arc<GradedGroup>) -> Result<RocklandOperator, CliError> {
    let d = group.dim();
    let r = &cfg.rockland;
    let coefficients = match (&r.coefficients, &r.active_axes) {
        (Some(c), _) => c.clone(),
        (None, Some(axes)) => {
            if let Some(bad) = axes.iter().find(|&&j| j >= d) {
                return Err(CliError::config("rockland.active_axes", format!("axis {bad} out of range for dimension {d}")));
            }
            (0..d).map(|j| if axes.contains(&j) { 1.0 } else { 0.0 }).collect()
        }
        (None, None) => vec![1.0; d],
    };
    let degree = match r.degree {
        Some(w) => w,
        None => {
            let active: Vec<Weight> = group
                .weights()
                .iter()
                .zip(&coefficients)
                .filter(|(_, &a)| a > 0.0)
                .map(|(w, _)| *w)
                .collect();
            if active.iter().any(|w| !w.is_integer()) {
                return Err(CliError::config("rockland.degree", "required when an active weight is fractional"));
            }
            let lcm = active
                .iter()
                .map(|w| *w.ratio().numer())
                .fold(1, |acc, v| acc / gcd(acc, v) * v);
            Weight::integer(2 * lcm)
        }
    };
    RocklandOperator::new(group.clone(), coefficients, degree).map_err(|e| CliError::config("rockland", e))
}

impl Pipeline {
    pub fn build(cfg: RunConfig, skip_normalization: bool) -> Result<Self, CliError> {
        let group = Arc::new(cfg.load_group()?);
        cfg.grid.validate().map_err(|e| CliError::config("grid", e))?;
        cfg.grid.check_group(&group).map_err(|e| CliError::config("grid", e))?;
        let operator = operator(&cfg, &group)?;
        let profile = Profile::from_spec(&cfg.multiplier).map_err(|e| CliError::config("multiplier", e))?;
        let nu = operator.degree_f64();
        if profile.calderon_integral(1e-10) == 0.0 {
            return Err(CliError::Degenerate("multiplier profile is identically zero".into()));
        }
        let multiplier = if skip_normalization {
            Multiplier::raw(profile, nu)
        } else {
            Multiplier::normalized(profile, nu)
        }
        .map_err(|e| CliError::config("multiplier", e))?;
        let scales = cfg.scales.build("scales")?;
        let [lo, hi] = cfg.test_band;
        if !(lo > 0.0 && hi > lo) {
            return Err(CliError::config("test_band", "need 0 < lo < hi"));
        }
        let calculus = Arc::new(Calculus::new(operator.clone(), cfg.grid.clone())?);
        let window = Window::from_multiplier(calculus.clone(), multiplier.clone())?;
        if window.field().norm_l2() == 0.0 {
            return Err(CliError::Degenerate("synthesized window vanishes on the grid".into()));
        }
        Ok(Pipeline {
            cfg,
            group,
            operator,
            multiplier,
            calculus,
            window,
            scales,
        })
    }

    /// The same multiplier window on another grid; `None` means the main grid.
    pub fn window_on(&self, grid: Option<&GridSpec>, key: &str) -> Result<Window, CliError> {
        match grid {
            None => Ok(self.window.clone()),
            Some(g) if *g == self.cfg.grid => Ok(self.window.clone()),
            Some(g) => {
                g.validate().map_err(|e| CliError::config(key, e))?;
                g.check_group(&self.group).map_err(|e| CliError::config(key, e))?;
                let calc = Arc::new(Calculus::new(self.operator.clone(), g.clone())?);
                Ok(Window::from_multiplier(calc, self.multiplier.clone())?)
            }
        }
    }

    /// The seeded band-limited test function.
    pub fn test_field(&self) -> Result<SampledField, CliError> {
        let [lo, hi] = self.cfg.test_band;
        Ok(band_limited_field(&self.calculus, (lo, hi), self.cfg.seed)?)
    }

    /// The scale range doubled at both ends, with a log-step no coarser than the base grid.
    pub fn widened_scales(&self) -> Result<ScaleGrid, CliError> {
        let (t0, t1) = (self.scales.t_min() / 2.0, self.scales.t_max() * 2.0);
        let steps = ((t1 / t0).ln() / self.scales.log_step() - 1e-9).ceil() as usize;
        Ok(ScaleGrid::geometric(t0, t1, steps + 1)?)
    }
}
