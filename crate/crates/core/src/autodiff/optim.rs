use super::matrix::Matrix;
use super::tape::{ParamId, ParamStore};
use crate::error::{Error, Result};

/// Step decay: `initial * decay^(steps / interval)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    pub initial: f64,
    pub decay: f64,
    pub interval: usize,
}

impl LrSchedule {
    pub fn new(initial: f64, decay: f64, interval: usize) -> Result<Self> {
        if initial.is_nan() || initial <= 0.0 || !(decay > 0.0 && decay <= 1.0) || interval == 0 {
            return Err(Error::InvalidArgument(format!(
                "learning-rate schedule needs lr > 0, decay in (0, 1], interval >= 1; got {initial}, {decay}, {interval}"
            )));
        }
        Ok(Self { initial, decay, interval })
    }

    pub fn constant(lr: f64) -> Self {
        Self { initial: lr, decay: 1.0, interval: usize::MAX }
    }

    /// Rate applied after `steps` completed updates.
    pub fn rate(&self, steps: usize) -> f64 {
        self.initial * self.decay.powi((steps / self.interval) as i32)
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    ids: Vec<ParamId>,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
    steps: usize,
    schedule: LrSchedule,
}

impl Adam {
    pub const BETA1: f64 = 0.9;
    pub const BETA2: f64 = 0.999;
    pub const EPS: f64 = 1e-8;

    pub fn new(store: &ParamStore, ids: Vec<ParamId>, schedule: LrSchedule) -> Self {
        let zeros = |id: &ParamId| {
            let (r, c) = store.value(*id).shape();
            Matrix::zeros(r, c)
        };
        let m = ids.iter().map(zeros).collect();
        let v = ids.iter().map(zeros).collect();
        Self { ids, m, v, steps: 0, schedule }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn current_lr(&self) -> f64 {
        self.schedule.rate(self.steps)
    }

    pub fn ids(&self) -> &[ParamId] {
        &self.ids
    }

    /// One bias-corrected update of every owned parameter from its stored gradient.
    pub fn step(&mut self, store: &mut ParamStore) {
        let lr = self.current_lr();
        self.steps += 1;
        let t = self.steps as i32;
        let c1 = 1.0 - Self::BETA1.powi(t);
        let c2 = 1.0 - Self::BETA2.powi(t);
        for (k, &id) in self.ids.iter().enumerate() {
            let grad = store.grad(id).clone();
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for ((mi, vi), g) in m.data_mut().iter_mut().zip(v.data_mut()).zip(grad.data()) {
                *mi = Self::BETA1 * *mi + (1.0 - Self::BETA1) * g;
                *vi = Self::BETA2 * *vi + (1.0 - Self::BETA2) * g * g;
            }
            let value = store.value_mut(id);
            for ((x, mi), vi) in value.data_mut().iter_mut().zip(m.data()).zip(v.data()) {
                let m_hat = mi / c1;
                let v_hat = vi / c2;
                *x -= lr * m_hat / (v_hat.sqrt() + Self::EPS);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_store(x: f64) -> (ParamStore, ParamId) {
        let mut store = ParamStore::new();
        let id = store.add("x", Matrix::scalar(x));
        (store, id)
    }

    #[test]
    fn unit_gradient_moves_by_the_learning_rate() {
        let (mut store, id) = scalar_store(2.0);
        let mut adam = Adam::new(&store, vec![id], LrSchedule::constant(0.1));
        store.zero_grad();
        store.accumulate_raw(id, &Matrix::scalar(1.0));
        adam.step(&mut store);
        assert!((store.value(id).data()[0] - 1.9).abs() < 1e-7);
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let (mut store, id) = scalar_store(2.0);
        let mut adam = Adam::new(&store, vec![id], LrSchedule::constant(0.1));
        for _ in 0..5 {
            adam.step(&mut store);
        }
        assert_eq!(store.value(id).data()[0], 2.0);
    }

    #[test]
    fn schedule_decays_on_interval_boundaries() {
        let s = LrSchedule::new(1e-3, 0.5, 100).unwrap();
        assert_eq!(s.rate(0), 1e-3);
        assert_eq!(s.rate(99), 1e-3);
        assert_eq!(s.rate(100), 5e-4);
        assert_eq!(s.rate(250), 2.5e-4);
        let (mut store, id) = scalar_store(0.0);
        let mut adam = Adam::new(&store, vec![id], LrSchedule::new(0.1, 0.5, 3).unwrap());
        for _ in 0..3 {
            adam.step(&mut store);
        }
        assert_eq!(adam.current_lr(), 0.05);
        assert!(LrSchedule::new(0.0, 0.5, 3).is_err());
        assert!(LrSchedule::new(0.1, 0.5, 0).is_err());
    }
}
