use crate::error::{Error, Result};
use crate::stl::{robustness, Formula, LabeledDataset};

/// Guards the denominator of the objective against zero spread.
pub const G_EPSILON: f64 = 1e-9;

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

/// `(mean_p - mean_n) / (std_p + std_n + eps)` over robustness values of the
/// two classes, with population standard deviations.
pub fn objective_from_rho(pos: &[f64], neg: &[f64]) -> Result<f64> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::InvalidDataset("both classes need at least one trajectory".into()));
    }
    let (mp, sp) = mean_std(pos);
    let (mn, sn) = mean_std(neg);
    Ok((mp - mn) / (sp + sn + G_EPSILON))
}

pub fn objective_g(f: &Formula, d: &LabeledDataset) -> Result<f64> {
    let pos = d.positives.iter().map(|x| robustness(f, x, 0)).collect::<Result<Vec<_>>>()?;
    let neg = d.negatives.iter().map(|x| robustness(f, x, 0)).collect::<Result<Vec<_>>>()?;
    objective_from_rho(&pos, &neg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::{parse_formula, Trajectory};

    fn constants(pos: &[f64], neg: &[f64]) -> LabeledDataset {
        let t = |v: &f64| Trajectory::univariate(vec![*v; 3]).unwrap();
        LabeledDataset::new(pos.iter().map(t).collect(), neg.iter().map(t).collect()).unwrap()
    }

    #[test]
    fn hand_computed() {
        let d = constants(&[1.0, 3.0], &[-1.0, -3.0]);
        let g = objective_g(&parse_formula("x0 >= 0").unwrap(), &d).unwrap();
        assert_eq!(g, 4.0 / (2.0 + G_EPSILON));
        assert!((g - 2.0).abs() < 1e-8);
    }

    #[test]
    fn antisymmetric_under_swap() {
        let d = constants(&[0.3, 1.7, -0.2], &[-1.0, 0.4]);
        let f = parse_formula("x0 >= 0.1").unwrap();
        assert_eq!(objective_g(&f, &d.swapped()).unwrap(), -objective_g(&f, &d).unwrap());
    }

    #[test]
    fn separated_constants_blow_up_positively() {
        let g = objective_g(&parse_formula("x0 >= 0").unwrap(), &constants(&[1.0], &[-1.0])).unwrap();
        assert!(g > 1e8);
    }
}
