use super::params::{ParamId, ParamStore};

/// Central difference `(f(x+h) - f(x-h)) / 2h` of `loss` with respect to
/// one coordinate of one parameter. The store is restored afterwards.
pub fn finite_diff_grad<F>(
    store: &mut ParamStore<f64>,
    id: ParamId,
    coord: usize,
    h: f64,
    mut loss: F,
) -> f64
where
    F: FnMut(&ParamStore<f64>) -> f64,
{
    let orig = store.value(id).data()[coord];
    store.value_mut(id).data_mut()[coord] = orig + h;
    let plus = loss(store);
    store.value_mut(id).data_mut()[coord] = orig - h;
    let minus = loss(store);
    store.value_mut(id).data_mut()[coord] = orig;
    (plus - minus) / (2.0 * h)
}

/// `|a - b| / max(|a|, |b|, floor)`; the floor keeps near-zero pairs from
/// reporting huge relative errors.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Tensor;

    #[test]
    fn square_at_three() {
        let mut s = ParamStore::new();
        let id = s.insert("x", Tensor::scalar(3.0)).unwrap();
        let g = finite_diff_grad(&mut s, id, 0, 1e-4, |s| s.value(id).item().powi(2));
        assert!((g - 6.0).abs() < 1e-6, "{g}");
        assert_eq!(s.value(id).item(), 3.0);
    }
}
