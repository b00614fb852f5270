//! Fixed-step classical Runge-Kutta integration with observers and
//! time-triggered parameter switches.

use log::warn;

use crate::error::{Error, Result};

/// A state-derivative function `dx/dt = f(t, x)`.
pub trait VectorField {
    /// Parameters replaced by switch events.
    type Params;

    fn dim(&self) -> usize;

    fn eval(&mut self, t: f64, x: &[f64], dx: &mut [f64]) -> Result<()>;

    fn set_params(&mut self, _params: &Self::Params) -> Result<()> {
        Ok(())
    }
}

/// Adapts a closure `(t, x, dx)` into a [`VectorField`] without parameters.
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F: FnMut(f64, &[f64], &mut [f64])> FnField<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: FnMut(f64, &[f64], &mut [f64])> VectorField for FnField<F> {
    type Params = ();

    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&mut self, t: f64, x: &[f64], dx: &mut [f64]) -> Result<()> {
        (self.f)(t, x, dx);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Switch<P> {
    pub time: f64,
    pub params: P,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationPlan<P = ()> {
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
    /// Observer cadence in steps.
    pub sample_every: usize,
    pub switches: Vec<Switch<P>>,
}

impl<P> IntegrationPlan<P> {
    pub fn new(t0: f64, t_end: f64, dt: f64) -> Result<Self> {
        let plan = Self {
            t0,
            t_end,
            dt,
            sample_every: 1,
            switches: Vec::new(),
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn with_sample_every(mut self, every: usize) -> Result<Self> {
        self.sample_every = every;
        self.validate()?;
        Ok(self)
    }

    pub fn with_switch(mut self, time: f64, params: P) -> Result<Self> {
        self.switches.push(Switch { time, params });
        self.validate()?;
        Ok(self)
    }

    /// Same grid with a different parameter type and no switches.
    pub fn grid<Q>(&self) -> IntegrationPlan<Q> {
        IntegrationPlan {
            t0: self.t0,
            t_end: self.t_end,
            dt: self.dt,
            sample_every: self.sample_every,
            switches: Vec::new(),
        }
    }

    /// Number of steps from `t0` to `t_end`.
    pub fn steps(&self) -> usize {
        ((self.t_end - self.t0) / self.dt).round() as usize
    }

    /// Grid time of step `k`.
    pub fn time_at(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Parameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t0 < self.t_end) || !self.t0.is_finite() || !self.t_end.is_finite() {
            return Err(Error::Parameter(format!(
                "need t0 < t_end, got [{}, {}]",
                self.t0, self.t_end
            )));
        }
        let span = (self.t_end - self.t0) / self.dt;
        if (span - span.round()).abs() > 1e-6 {
            return Err(Error::Parameter(format!(
                "horizon {} is not a whole number of steps of {}",
                self.t_end - self.t0,
                self.dt
            )));
        }
        if self.sample_every == 0 {
            return Err(Error::Parameter("sample_every must be >= 1".into()));
        }
        let mut last = self.t0;
        for s in &self.switches {
            if !(s.time > self.t0 && s.time < self.t_end) {
                return Err(Error::Parameter(format!(
                    "switch at t={} outside ({}, {})",
                    s.time, self.t0, self.t_end
                )));
            }
            if s.time <= last && last != self.t0 {
                return Err(Error::Parameter("switch times must be strictly ascending".into()));
            }
            last = s.time;
        }
        Ok(())
    }

    fn switch_steps(&self) -> Result<Vec<usize>> {
        let n = self.steps();
        self.switches
            .iter()
            .map(|s| {
                let exact = (s.time - self.t0) / self.dt;
                let k = exact.round();
                if (exact - k).abs() > 1e-9 {
                    warn!(
                        "switch at t={} snapped to grid time {}",
                        s.time,
                        self.time_at(k as usize)
                    );
                }
                let k = k as usize;
                if k == 0 || k >= n {
                    Err(Error::Parameter(format!(
                        "switch at t={} snaps outside the horizon",
                        s.time
                    )))
                } else {
                    Ok(k)
                }
            })
            .collect()
    }
}

/// Receives `(t, x)` at every sample point.
///
/// Observers run right after the field has been evaluated at `(t, x)`, so any
/// per-evaluation cache the field keeps refers to the observed state.
pub trait Observer<F: ?Sized> {
    fn observe(&mut self, t: f64, x: &[f64], field: &F);
}

impl<F: ?Sized, C: FnMut(f64, &[f64], &F)> Observer<F> for C {
    fn observe(&mut self, t: f64, x: &[f64], field: &F) {
        self(t, x, field)
    }
}

/// Integrates `field` from `x0` over the plan and returns the final state.
///
/// Observers are notified at `t0`, every `sample_every` steps, and at `t_end`.
pub fn integrate<F: VectorField>(
    field: &mut F,
    x0: &[f64],
    plan: &IntegrationPlan<F::Params>,
    observers: &mut [&mut dyn Observer<F>],
) -> Result<Vec<f64>> {
    plan.validate()?;
    let dim = field.dim();
    if x0.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: x0.len(),
        });
    }
    if let Some(bad) = x0.iter().position(|v| !v.is_finite()) {
        return Err(Error::Parameter(format!("non-finite initial state component {bad}")));
    }
    let n_steps = plan.steps();
    let switch_steps = plan.switch_steps()?;
    let mut next_switch = 0;

    let dt = plan.dt;
    let mut x = x0.to_vec();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];

    for step in 0..=n_steps {
        let t = plan.time_at(step);
        while next_switch < switch_steps.len() && switch_steps[next_switch] == step {
            field.set_params(&plan.switches[next_switch].params)?;
            next_switch += 1;
        }
        let observe = step % plan.sample_every == 0 || step == n_steps;
        if step == n_steps {
            if observe && !observers.is_empty() {
                field.eval(t, &x, &mut k1)?;
                for o in observers.iter_mut() {
                    o.observe(t, &x, field);
                }
            }
            break;
        }
        field.eval(t, &x, &mut k1)?;
        if observe {
            for o in observers.iter_mut() {
                o.observe(t, &x, field);
            }
        }
        for i in 0..dim {
            tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        field.eval(t + 0.5 * dt, &tmp, &mut k2)?;
        for i in 0..dim {
            tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        field.eval(t + 0.5 * dt, &tmp, &mut k3)?;
        for i in 0..dim {
            tmp[i] = x[i] + dt * k3[i];
        }
        field.eval(t + dt, &tmp, &mut k4)?;
        for i in 0..dim {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                t: plan.time_at(step + 1),
            });
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay() -> FnField<impl FnMut(f64, &[f64], &mut [f64])> {
        FnField::new(1, |_t, x: &[f64], dx: &mut [f64]| dx[0] = -x[0])
    }

    #[test]
    fn constant_field_is_exact() {
        let mut f = FnField::new(3, |_t, _x: &[f64], dx: &mut [f64]| {
            dx.copy_from_slice(&[0.5, -1.0, 2.0])
        });
        let plan = IntegrationPlan::new(0.0, 4.0, 0.25).unwrap();
        let x = integrate(&mut f, &[1.0, 2.0, 3.0], &plan, &mut []).unwrap();
        assert_eq!(x, vec![3.0, -2.0, 11.0]);
    }

    #[test]
    fn exponential_decay_accuracy() {
        let plan = IntegrationPlan::new(0.0, 1.0, 0.1).unwrap();
        let x = integrate(&mut decay(), &[1.0], &plan, &mut []).unwrap();
        assert!((x[0] - (-1f64).exp()).abs() <= 1e-6);
    }

    #[test]
    fn observers_see_endpoints_and_cadence() {
        let plan = IntegrationPlan::new(0.0, 1.0, 0.1)
            .unwrap()
            .with_sample_every(3)
            .unwrap();
        let mut times = Vec::new();
        let mut obs = |t: f64, _x: &[f64], _f: &FnField<_>| times.push(t);
        let mut f = FnField::new(1, |_t, _x: &[f64], dx: &mut [f64]| dx[0] = 1.0);
        integrate(&mut f, &[0.0], &plan, &mut [&mut obs]).unwrap();
        let expected = [0.0, 0.3, 0.6, 0.9, 1.0];
        assert_eq!(times.len(), expected.len());
        for (a, b) in times.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn divergence_reports_time() {
        let mut f = FnField::new(1, |_t, x: &[f64], dx: &mut [f64]| dx[0] = x[0] * x[0]);
        let plan = IntegrationPlan::new(0.0, 10.0, 0.1).unwrap();
        match integrate(&mut f, &[1.0], &plan, &mut []) {
            Err(Error::Divergence { t }) => assert!(t > 0.0 && t <= 10.0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn plan_validation() {
        assert!(IntegrationPlan::<()>::new(0.0, 1.0, 0.0).is_err());
        assert!(IntegrationPlan::<()>::new(1.0, 1.0, 0.1).is_err());
        assert!(IntegrationPlan::<()>::new(0.0, 1.0, 0.3).is_err());
        assert!(IntegrationPlan::new(0.0, 1.0, 0.1)
            .unwrap()
            .with_switch(1.0, ())
            .is_err());
        assert!(IntegrationPlan::new(0.0, 1.0, 0.1)
            .unwrap()
            .with_switch(0.5, ())
            .unwrap()
            .with_switch(0.4, ())
            .is_err());
        assert_eq!(IntegrationPlan::<()>::new(0.0, 40.0, 0.1).unwrap().steps(), 400);
    }

    #[test]
    fn dimension_mismatch() {
        let plan = IntegrationPlan::new(0.0, 1.0, 0.1).unwrap();
        assert!(matches!(
            integrate(&mut decay(), &[1.0, 2.0], &plan, &mut []),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    struct Scaled {
        rate: f64,
    }

    impl VectorField for Scaled {
        type Params = f64;
        fn dim(&self) -> usize {
            1
        }
        fn eval(&mut self, _t: f64, x: &[f64], dx: &mut [f64]) -> Result<()> {
            dx[0] = -self.rate * x[0];
            Ok(())
        }
        fn set_params(&mut self, p: &f64) -> Result<()> {
            self.rate = *p;
            Ok(())
        }
    }

    #[test]
    fn switches_apply_from_their_grid_point() {
        let plain = IntegrationPlan::new(0.0, 2.0, 0.1).unwrap();
        let same = plain.clone().with_switch(1.0, 1.0).unwrap();
        let a = integrate(&mut Scaled { rate: 1.0 }, &[1.0], &plain, &mut []).unwrap();
        let b = integrate(&mut Scaled { rate: 1.0 }, &[1.0], &same, &mut []).unwrap();
        assert_eq!(a, b);
        // rate 0 after t=1 freezes the state at its t=1 value
        let freeze = plain.clone().with_switch(1.0, 0.0).unwrap();
        let c = integrate(&mut Scaled { rate: 1.0 }, &[1.0], &freeze, &mut []).unwrap();
        let half = IntegrationPlan::new(0.0, 1.0, 0.1).unwrap();
        let d = integrate(&mut Scaled { rate: 1.0 }, &[1.0], &half, &mut []).unwrap();
        assert_eq!(c, d);
    }
}
