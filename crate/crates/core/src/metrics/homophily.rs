use serde::{Deserialize, Serialize};

use crate::affiliation::Affiliation;
use crate::error::{Error, Result};
use crate::network::InteractionNetwork;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EiVariant {
    #[default]
    Classic,
    Modified,
}

/// Which edges qualify. `LabeledOnly` keeps edges whose endpoints are both
/// labeled; `Broader` also keeps labeled–Unaffiliated edges, counted external.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EiScope {
    #[default]
    LabeledOnly,
    Broader,
}

/// How the modified index combines groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EiCombine {
    #[default]
    GroupMean,
    Pooled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EiOptions {
    /// Classic only: sum weights instead of counting edges.
    pub weighted: bool,
    pub variant: EiVariant,
    pub scope: EiScope,
    pub combine: EiCombine,
}

fn ratio<T: Scalar>(ext: u64, int: u64) -> T {
    (T::from_count(ext) - T::from_count(int)) / T::from_count(ext + int)
}

/// E-I index over `(source, target, weight)` edges with `groups[node]`
/// labels. Self-loops never qualify.
pub fn ei_index<T: Scalar>(
    edges: &[(u32, u32, u64)],
    groups: &[Affiliation],
    opts: &EiOptions,
) -> Result<T> {
    // per labeled group: (external, internal) weight
    let mut per_group = [(0u64, 0u64); 2];
    let (mut ext, mut int) = (0u64, 0u64);
    for &(s, t, w) in edges {
        if s == t {
            continue;
        }
        let (gs, gt) = (groups[s as usize], groups[t as usize]);
        let qualifies = match opts.scope {
            EiScope::LabeledOnly => gs.is_labeled() && gt.is_labeled(),
            EiScope::Broader => gs.is_labeled() || gt.is_labeled(),
        };
        if !qualifies {
            continue;
        }
        let amount = if opts.weighted || opts.variant == EiVariant::Modified {
            w
        } else {
            1
        };
        if gs == gt {
            int += amount;
            per_group[gs.index()].1 += w;
        } else {
            ext += amount;
            for g in [gs, gt] {
                if g.is_labeled() {
                    per_group[g.index()].0 += w;
                }
            }
        }
    }
    if ext + int == 0 {
        return Err(Error::Undefined(
            "no qualifying edges for the E-I index".into(),
        ));
    }
    match (opts.variant, opts.combine) {
        (EiVariant::Classic, _) => Ok(ratio(ext, int)),
        (EiVariant::Modified, EiCombine::Pooled) => {
            let (e, i) = per_group
                .iter()
                .fold((0, 0), |(e, i), &(ge, gi)| (e + ge, i + gi));
            Ok(ratio(e, i))
        }
        (EiVariant::Modified, EiCombine::GroupMean) => {
            // e_g − i_g = 2·e_g − 1 = (W_ext − W_int)/(W_ext + W_int)
            let mut sum = T::zero();
            let mut n = 0u64;
            for &(ge, gi) in per_group.iter().filter(|(e, i)| e + i > 0) {
                sum = sum + ratio::<T>(ge, gi);
                n += 1;
            }
            Ok(sum / T::from_count(n))
        }
    }
}

pub fn ei_index_network<T: Scalar>(net: &InteractionNetwork, opts: &EiOptions) -> Result<T> {
    let edges: Vec<(u32, u32, u64)> = net.arcs().collect();
    ei_index(&edges, &net.affiliations(), opts).map_err(|e| match e {
        Error::Undefined(msg) => Error::Undefined(format!("{msg} in the {} network", net.kind)),
        other => other,
    })
}

/// Symmetric normalized mixing matrix over Supporter/Opposer edges. Each
/// edge contributes half its weight to `e[g][h]` and half to `e[h][g]`.
pub fn mixing_matrix<T: Scalar>(net: &InteractionNetwork) -> Result<Vec<Vec<T>>> {
    let edges: Vec<(u32, u32, u64)> = net.arcs().collect();
    mixing_matrix_from_edges(&edges, &net.affiliations())
        .map_err(|_| Error::Undefined(format!("no labeled edges in the {} network", net.kind)))
}

pub fn mixing_matrix_from_edges<T: Scalar>(
    edges: &[(u32, u32, u64)],
    groups: &[Affiliation],
) -> Result<Vec<Vec<T>>> {
    let mut counts = [[0u64; 2]; 2];
    let mut total = 0u64;
    for &(s, t, w) in edges {
        if s == t {
            continue;
        }
        let (gs, gt) = (groups[s as usize], groups[t as usize]);
        if !(gs.is_labeled() && gt.is_labeled()) {
            continue;
        }
        counts[gs.index()][gt.index()] += w;
        counts[gt.index()][gs.index()] += w;
        total += 2 * w;
    }
    if total == 0 {
        return Err(Error::Undefined("no labeled edges".into()));
    }
    Ok(counts
        .iter()
        .map(|row| row.iter().map(|&c| T::from_ratio_parts(c, total)).collect())
        .collect())
}

/// `r = (Tr e − Σ a_i²) / (1 − Σ a_i²)` with `a_i` the row sums of `e`.
pub fn assortativity_from_mixing<T: Scalar>(e: &[Vec<T>]) -> Result<T> {
    let mut trace = T::zero();
    let mut sum_sq = T::zero();
    for (i, row) in e.iter().enumerate() {
        trace = trace + row[i];
        let a = row.iter().fold(T::zero(), |acc, &x| acc + x);
        sum_sq = sum_sq + a * a;
    }
    let denom = T::one() - sum_sq;
    if denom == T::zero() {
        return Err(Error::Undefined("degenerate mixing matrix".into()));
    }
    Ok((trace - sum_sq) / denom)
}

pub fn assortativity<T: Scalar>(net: &InteractionNetwork) -> Result<T> {
    assortativity_from_mixing(&mixing_matrix::<T>(net)?)
}
