//! Instance manifests (JSON, schema 1) and instance construction.

use std::path::Path;
use std::sync::Arc;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use hdx_core::builders::{abelian_lift_product, group_cyclic, group_z2e, AbelianGroup, BaseGraphSpec};
use hdx_core::ff2e::{field_make, FieldMatrix, Gf};
use hdx_core::geometry::{ComplexGeometry, PermutationSet};
use hdx_core::local::{search_robust_tuple, TupleSearchParams};
use hdx_core::sheaf::{LocalCodes, SheafComplex};

use crate::CliError;

pub const SCHEMA: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema: u32,
    #[serde(default)]
    pub name: String,
    pub t: usize,
    /// q = 2^field_degree.
    pub field_degree: u32,
    pub group: GroupSpec,
    pub codes: CodeSpec,
    #[serde(default)]
    pub budgets: Budgets,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GroupSpec {
    /// XOR translations of (Z/2)^rank.
    Z2e { rank: u32, generators: Vec<Vec<u64>> },
    /// Translations of Z/order.
    Cyclic { order: usize, generators: Vec<Vec<i64>> },
    /// t-fold product of an H-lift of a Cayley graph on an abelian base group.
    AbelianLiftProduct { base_factors: Vec<u32>, base_generators: Vec<usize>, lift_factors: Vec<u32>, labels: LiftLabels },
    /// Raw permutations per direction and generator.
    Permutations { size: usize, generators: Vec<Vec<Vec<u32>>> },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum LiftLabels {
    Constant { label: usize },
    Random { seed: u64 },
    Explicit { labels: Vec<Vec<usize>> },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum CodeSpec {
    /// One parity-check matrix per direction, entries as field-element integers.
    Explicit { h: Vec<Vec<Vec<Gf>>> },
    /// Random full-row-rank codes with the given row counts, drawn from the manifest seed.
    Random { ms: Vec<usize> },
    /// Best two-way robust tuple found by search.
    Search {
        ms: Vec<usize>,
        #[serde(default = "default_trials")]
        trials: usize,
        #[serde(default)]
        exhaust: bool,
    },
}

fn default_trials() -> usize {
    64
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    /// States for coset enumeration in distance and expansion measurements.
    pub distance: usize,
    /// States for local robustness measurements.
    pub local: usize,
    /// Random test sets per level for the walk inequalities.
    pub walk_sets: usize,
    /// Random boundaries for cycle filling.
    pub fill_trials: usize,
    /// Shots per weight in decoder curves.
    pub decode_shots: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { distance: 1 << 20, local: 1 << 16, walk_sets: 200, fill_trials: 100, decode_shots: 200 }
    }
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let m: Manifest = serde_json::from_str(text).map_err(|e| CliError::Manifest(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Manifest(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Manifest(msg));
        if self.schema != SCHEMA {
            return bad(format!("unsupported schema {} (expected {SCHEMA})", self.schema));
        }
        if self.t == 0 || self.t > hdx_core::geometry::MAX_T {
            return bad(format!("t = {} outside 1..={}", self.t, hdx_core::geometry::MAX_T));
        }
        if self.field_degree == 0 || self.field_degree > 16 {
            return bad(format!("field_degree {} outside 1..=16", self.field_degree));
        }
        let dirs = match &self.group {
            GroupSpec::Z2e { generators, .. } => Some(generators.len()),
            GroupSpec::Cyclic { generators, .. } => Some(generators.len()),
            GroupSpec::Permutations { generators, .. } => Some(generators.len()),
            GroupSpec::AbelianLiftProduct { .. } => None,
        };
        if let Some(d) = dirs {
            if d != self.t {
                return bad(format!("{d} generator lists for t = {}", self.t));
            }
        }
        let rows = match &self.codes {
            CodeSpec::Explicit { h } => h.len(),
            CodeSpec::Random { ms } | CodeSpec::Search { ms, .. } => ms.len(),
        };
        if rows != self.t {
            return bad(format!("{rows} local codes for t = {}", self.t));
        }
        Ok(())
    }

    /// Canonical serialization: field order fixed by the struct, no whitespace.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("plain data")
    }

    pub fn hash(&self) -> String {
        let d = Sha256::digest(self.canonical().as_bytes());
        d.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// A built complex together with the manifest it came from.
pub struct Instance {
    pub manifest: Manifest,
    pub hash: String,
    pub sheaf: SheafComplex,
}

fn permsets(m: &Manifest) -> Result<(usize, Vec<PermutationSet>), CliError> {
    Ok(match &m.group {
        GroupSpec::Z2e { rank, generators } => group_z2e(*rank, generators)?,
        GroupSpec::Cyclic { order, generators } => group_cyclic(*order, generators)?,
        GroupSpec::AbelianLiftProduct { base_factors, base_generators, lift_factors, labels } => {
            let base = AbelianGroup::new(base_factors.clone())?;
            let lift = AbelianGroup::new(lift_factors.clone())?;
            let spec = match labels {
                LiftLabels::Constant { label } => BaseGraphSpec::constant(base, base_generators.clone(), lift, *label),
                LiftLabels::Random { seed } => BaseGraphSpec::random(base, base_generators.clone(), lift, *seed)?,
                LiftLabels::Explicit { labels } => {
                    BaseGraphSpec { base, generators: base_generators.clone(), lift, labels: labels.clone() }
                }
            };
            abelian_lift_product(&spec, m.t)?
        }
        GroupSpec::Permutations { size, generators } => {
            let sets = generators
                .iter()
                .enumerate()
                .map(|(j, g)| PermutationSet::new(j, g.clone()))
                .collect::<Result<Vec<_>, _>>()?;
            (*size, sets)
        }
    })
}

fn local_codes(m: &Manifest, n: usize) -> Result<LocalCodes, CliError> {
    let f = field_make(m.field_degree).map_err(|e| CliError::Manifest(e.to_string()))?;
    match &m.codes {
        CodeSpec::Explicit { h } => {
            let q = f.order();
            for (j, rows) in h.iter().enumerate() {
                if rows.iter().any(|r| r.len() != n) {
                    return Err(CliError::Manifest(format!("code {j}: rows must have n = {n} entries")));
                }
                if rows.iter().flatten().any(|&v| v as usize >= q) {
                    return Err(CliError::Manifest(format!("code {j}: entry outside GF({q})")));
                }
            }
            Ok(LocalCodes::new(f, h.iter().map(|r| FieldMatrix::from_dense_rows(r.len(), n, r)).collect())?)
        }
        CodeSpec::Random { ms } => {
            let mut rng = ChaCha8Rng::seed_from_u64(m.seed);
            Ok(LocalCodes::random(f, n, ms, &mut rng)?)
        }
        CodeSpec::Search { ms, trials, exhaust } => {
            let p = TupleSearchParams {
                t: m.t,
                n,
                ms: ms.clone(),
                e: m.field_degree,
                trials: *trials,
                budget: m.budgets.local,
                seed: m.seed,
                exhaust: *exhaust,
            };
            let res = search_robust_tuple(&p)?;
            let best = res.best.ok_or_else(|| CliError::Construction("tuple search found no full-rank tuple".into()))?;
            Ok(LocalCodes::new(f, best.iter().map(|r| FieldMatrix::from_dense_rows(r.len(), n, r)).collect())?)
        }
    }
}

impl Instance {
    pub fn build(manifest: Manifest) -> Result<Self, CliError> {
        let (size, sets) = permsets(&manifest)?;
        if sets.len() != manifest.t {
            return Err(CliError::Manifest(format!("group yields {} directions for t = {}", sets.len(), manifest.t)));
        }
        let geom = Arc::new(ComplexGeometry::build(size, sets)?);
        let codes = local_codes(&manifest, geom.n())?;
        let sheaf = SheafComplex::new(geom, codes)?;
        let hash = manifest.hash();
        Ok(Instance { manifest, hash, sheaf })
    }
}
