/// Projects a discrete distribution with mass `probs[j]` at `values[j]` onto
/// `atoms` evenly spaced points in `[v_min, v_max]`, splitting each mass
/// linearly between its two neighbouring atoms. Values outside the support
/// are clamped to its ends.
pub fn project_distribution(values: &[f64], probs: &[f64], atoms: usize, v_min: f64, v_max: f64) -> Vec<f64> {
    assert_eq!(values.len(), probs.len());
    assert!(atoms >= 2 && v_max > v_min, "degenerate support");
    let mut out = vec![0.0; atoms];
    accumulate_projection(&mut out, values, probs, 1.0, v_min, v_max);
    out
}

/// Adds `scale` times the projection of `(values, probs)` into `out`.
pub(crate) fn accumulate_projection(out: &mut [f64], values: &[f64], probs: &[f64], scale: f64, v_min: f64, v_max: f64) {
    let atoms = out.len();
    let dz = (v_max - v_min) / (atoms - 1) as f64;
    for (v, p) in values.iter().zip(probs) {
        let mass = scale * p;
        if mass == 0.0 {
            continue;
        }
        let b = ((v.clamp(v_min, v_max) - v_min) / dz).clamp(0.0, (atoms - 1) as f64);
        let l = b.floor();
        let u = b.ceil();
        if l == u {
            out[l as usize] += mass;
        } else {
            out[l as usize] += mass * (u - b);
            out[u as usize] += mass * (b - l);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_splits_between_neighbours() {
        let p = project_distribution(&[0.3], &[1.0], 2, 0.0, 1.0);
        assert_eq!(p, vec![0.7, 0.3]);
    }

    #[test]
    fn on_atom_value_stays_put() {
        let p = project_distribution(&[0.5], &[1.0], 3, 0.0, 1.0);
        assert_eq!(p, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn out_of_range_clamps() {
        assert_eq!(project_distribution(&[-3.0], &[1.0], 3, 0.0, 1.0), vec![1.0, 0.0, 0.0]);
        assert_eq!(project_distribution(&[7.0], &[1.0], 3, 0.0, 1.0), vec![0.0, 0.0, 1.0]);
    }
}
