use crate::error::{Error, Result};
use crate::stl::{satisfies, Formula, Trajectory};

/// Slack on the agreement threshold so that a fraction equal to `omega` up to
/// rounding still counts.
const OMEGA_SLACK: f64 = 1e-12;

/// Fraction of trajectories on which the two formulae agree in Boolean verdict.
pub fn agreement(query: &Formula, hit: &Formula, trajs: &[Trajectory]) -> Result<f64> {
    if trajs.is_empty() {
        return Err(Error::Config("relevance needs at least one trajectory".into()));
    }
    let mut same = 0usize;
    for x in trajs {
        if satisfies(query, x, 0)? == satisfies(hit, x, 0)? {
            same += 1;
        }
    }
    Ok(same as f64 / trajs.len() as f64)
}

/// Whether `hit` agrees with `query` on at least a fraction `omega` of `trajs`.
pub fn relevant(query: &Formula, hit: &Formula, trajs: &[Trajectory], omega: f64) -> Result<bool> {
    Ok(agreement(query, hit, trajs)? >= omega - OMEGA_SLACK)
}

fn check_k(len: usize, k: usize) -> Result<()> {
    if k == 0 || k > len {
        return Err(Error::Config(format!("K = {k} must lie in 1..={len}")));
    }
    Ok(())
}

/// `sum_k P@k rel_k / sum_k rel_k` over the top `k`; 0 when nothing is relevant.
pub fn ap_at_k(rels: &[bool], k: usize) -> Result<f64> {
    check_k(rels.len(), k)?;
    let mut hits = 0usize;
    let mut acc = 0.0;
    for (i, &r) in rels[..k].iter().enumerate() {
        if r {
            hits += 1;
            acc += hits as f64 / (i + 1) as f64;
        }
    }
    Ok(if hits == 0 { 0.0 } else { acc / hits as f64 })
}

/// DCG of the top `k` over the DCG of the same gains sorted descending; 1
/// when every gain is zero.
pub fn ndcg_at_k(gains: &[f64], k: usize) -> Result<f64> {
    check_k(gains.len(), k)?;
    let dcg = |g: &[f64]| g.iter().enumerate().map(|(i, r)| r / ((i + 2) as f64).log2()).sum::<f64>();
    let mut ideal = gains.to_vec();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let idcg = dcg(&ideal[..k]);
    Ok(if idcg == 0.0 { 1.0 } else { dcg(&gains[..k]) / idcg })
}
