use super::params::ParamStore;
use super::tensor::Scalar;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Adam {
    pub fn new(lr: f64) -> Result<Adam> {
        if !(lr > 0.0) || !lr.is_finite() {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {lr}"
            )));
        }
        Ok(Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        })
    }

    /// One bias-corrected Adam update from the accumulated gradients, which
    /// are cleared afterwards. Tensors whose gradient is entirely zero are
    /// left untouched, moments included.
    pub fn step<T: Scalar>(&self, store: &mut ParamStore<T>) {
        let (b1, b2) = (T::c(self.beta1), T::c(self.beta2));
        let (lr, eps) = (T::c(self.lr), T::c(self.eps));
        for i in 0..store.len() {
            if store.grads[i].data().iter().all(|g| *g == T::zero()) {
                continue;
            }
            store.steps[i] += 1;
            let t = store.steps[i] as i32;
            let c1 = T::one() - b1.powi(t);
            let c2 = T::one() - b2.powi(t);
            let g = store.grads[i].data();
            let m = store.first_moment[i].data_mut();
            for (mj, &gj) in m.iter_mut().zip(g) {
                *mj = b1 * *mj + (T::one() - b1) * gj;
            }
            let v = store.second_moment[i].data_mut();
            for (vj, &gj) in v.iter_mut().zip(g) {
                *vj = b2 * *vj + (T::one() - b2) * gj * gj;
            }
            let (m, v) = (store.first_moment[i].data(), store.second_moment[i].data());
            let w = store.values[i].data_mut();
            for j in 0..w.len() {
                let mhat = m[j] / c1;
                let vhat = v[j] / c2;
                w[j] -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
        store.zero_grad();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Tensor;

    fn scalar_store(w: f64) -> (ParamStore<f64>, crate::numerics::ParamId) {
        let mut s = ParamStore::new();
        let id = s.insert("w", Tensor::scalar(w)).unwrap();
        (s, id)
    }

    #[test]
    fn first_step_moves_by_lr() {
        // m = 0.1, v = 0.001; bias-corrected mhat = vhat = 1 -> step = lr / (1 + eps)
        let (mut s, id) = scalar_store(0.0);
        s.grads[id.0] = Tensor::scalar(1.0);
        Adam::new(0.1).unwrap().step(&mut s);
        let expected = -0.1 / (1.0 + 1e-8);
        assert!((s.value(id).item() - expected).abs() < 1e-15);
        assert_eq!(s.grad(id).item(), 0.0);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let (mut s, id) = scalar_store(1.5);
        s.grads[id.0] = Tensor::scalar(2.0);
        let adam = Adam::new(0.01).unwrap();
        adam.step(&mut s);
        let after_one = s.value(id).item();
        adam.step(&mut s);
        assert_eq!(s.value(id).item(), after_one);
    }

    #[test]
    fn quadratic_loss_decreases() {
        // f(w) = (w - 3)^2, grad = 2(w - 3)
        let (mut s, id) = scalar_store(0.0);
        let adam = Adam::new(0.5).unwrap();
        let f = |w: f64| (w - 3.0) * (w - 3.0);
        let mut last = f(0.0);
        for _ in 0..2 {
            let w = s.value(id).item();
            s.grads[id.0] = Tensor::scalar(2.0 * (w - 3.0));
            adam.step(&mut s);
            let now = f(s.value(id).item());
            assert!(now < last);
            last = now;
        }
    }

    #[test]
    fn rejects_non_positive_lr() {
        assert!(matches!(Adam::new(0.0), Err(Error::Config(_))));
        assert!(matches!(Adam::new(-1e-3), Err(Error::Config(_))));
        assert!(matches!(Adam::new(f64::NAN), Err(Error::Config(_))));
    }
}
