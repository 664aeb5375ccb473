//! Single-piece width estimate.

/// `K |U|_g^((n-1)/n) (1 + |U|_g0^(1/n))`.
pub fn width_one_bound_dim(area_g: f64, area_g0: f64, k_width: f64, n: usize) -> f64 {
    if area_g <= 0.0 {
        return 0.0;
    }
    let n = n as f64;
    k_width * area_g.powf((n - 1.0) / n) * (1.0 + area_g0.max(0.0).powf(1.0 / n))
}

/// Surface case of [`width_one_bound_dim`].
pub fn width_one_bound(area_g: f64, area_g0: f64, k_width: f64) -> f64 {
    width_one_bound_dim(area_g, area_g0, k_width, 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula() {
        assert_eq!(width_one_bound(1.0, 1.0, 1.0), 2.0);
        assert_eq!(width_one_bound(0.0, 7.0, 3.0), 0.0);
        assert_eq!(width_one_bound(4.0, 1.0, 1.0), 4.0);
    }
}
