//! Feature declarations, subspace definitions, and dense state indexing.
//!
//! A state is a tuple of discrete feature values. A subspace selects a subset
//! of the features; distinct full-space states that agree on the selected
//! features project onto the same subspace state. Every space (the full-space
//! included) gets a mixed-radix indexer so its states can be stored in flat
//! tables.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpaceError {
    #[error("feature `{name}` value {value} outside declared range [{lo}, {hi}]")]
    FeatureOutOfRange {
        name: String,
        value: u16,
        lo: u16,
        hi: u16,
    },
    #[error("observation has {got} features, space declares {want}")]
    ArityMismatch { got: usize, want: usize },
    #[error("subspace must select at least one feature")]
    EmptySubspace,
    #[error("subspace feature indices must be strictly increasing and < {num_features}")]
    BadFeatureIndices { num_features: usize },
    #[error("duplicate subspace in family")]
    DuplicateSubspace,
    #[error("a subspace must not equal the complete feature set")]
    SubspaceEqualsFull,
    #[error("unknown feature name `{0}`")]
    UnknownFeature(String),
}

/// One discrete feature: a named variable with an inclusive value range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureDef {
    pub name: String,
    pub lo: u16,
    pub hi: u16,
}

impl FeatureDef {
    pub fn new(name: impl Into<String>, lo: u16, hi: u16) -> Self {
        let name = name.into();
        assert!(lo <= hi, "feature `{name}` has empty range");
        Self { name, lo, hi }
    }

    pub fn cardinality(&self) -> usize {
        (self.hi - self.lo) as usize + 1
    }
}

/// The declared feature set. The full-space is the Cartesian product of all
/// feature ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpace {
    features: Vec<FeatureDef>,
}

impl FeatureSpace {
    pub fn new(features: Vec<FeatureDef>) -> Self {
        assert!(!features.is_empty(), "feature space needs >= 1 feature");
        Self { features }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[FeatureDef] {
        &self.features
    }

    pub fn index_of(&self, name: &str) -> Result<usize, SpaceError> {
        self.features
            .iter()
            .position(|f| f.name == name)
            .ok_or_else(|| SpaceError::UnknownFeature(name.to_string()))
    }
}

/// Mixed-radix bijection between feature-value tuples and dense indices
/// `[0, N)` where `N` is the product of the cardinalities.
///
/// The first feature is the most significant digit, so indices for fixed
/// leading features are contiguous.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateIndexer {
    lows: Vec<u16>,
    highs: Vec<u16>,
    names: Vec<String>,
    len: usize,
}

impl StateIndexer {
    fn from_features(features: &[FeatureDef]) -> Self {
        let len = features.iter().map(FeatureDef::cardinality).product();
        Self {
            lows: features.iter().map(|f| f.lo).collect(),
            highs: features.iter().map(|f| f.hi).collect(),
            names: features.iter().map(|f| f.name.clone()).collect(),
            len,
        }
    }

    /// Number of distinct states.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Dense index of a value tuple.
    pub fn index(&self, values: &[u16]) -> Result<usize, SpaceError> {
        if values.len() != self.lows.len() {
            return Err(SpaceError::ArityMismatch {
                got: values.len(),
                want: self.lows.len(),
            });
        }
        let mut idx = 0usize;
        for (i, &v) in values.iter().enumerate() {
            if v < self.lows[i] || v > self.highs[i] {
                return Err(SpaceError::FeatureOutOfRange {
                    name: self.names[i].clone(),
                    value: v,
                    lo: self.lows[i],
                    hi: self.highs[i],
                });
            }
            let card = (self.highs[i] - self.lows[i]) as usize + 1;
            idx = idx * card + (v - self.lows[i]) as usize;
        }
        Ok(idx)
    }

    /// Inverse of [`index`](Self::index); exact round-trip.
    pub fn values(&self, mut index: usize) -> Vec<u16> {
        assert!(index < self.len, "index {index} out of range {}", self.len);
        let mut out = vec![0u16; self.lows.len()];
        for i in (0..self.lows.len()).rev() {
            let card = (self.highs[i] - self.lows[i]) as usize + 1;
            out[i] = self.lows[i] + (index % card) as u16;
            index /= card;
        }
        out
    }
}

/// A nonempty ordered subset of the declared features, with its own dense
/// indexer. The projection of a full-space observation keeps only the
/// selected features.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubspaceDef {
    feature_indices: Vec<usize>,
    indexer: StateIndexer,
    name: String,
}

impl SubspaceDef {
    pub fn new(space: &FeatureSpace, feature_indices: Vec<usize>) -> Result<Self, SpaceError> {
        if feature_indices.is_empty() {
            return Err(SpaceError::EmptySubspace);
        }
        let strictly_increasing = feature_indices.windows(2).all(|w| w[0] < w[1]);
        if !strictly_increasing || *feature_indices.last().unwrap() >= space.len() {
            return Err(SpaceError::BadFeatureIndices {
                num_features: space.len(),
            });
        }
        let selected: Vec<FeatureDef> = feature_indices
            .iter()
            .map(|&i| space.features()[i].clone())
            .collect();
        let name = selected
            .iter()
            .map(|f| f.name.as_str())
            .collect::<Vec<_>>()
            .join("+");
        Ok(Self {
            feature_indices,
            indexer: StateIndexer::from_features(&selected),
            name,
        })
    }

    pub fn feature_indices(&self) -> &[usize] {
        &self.feature_indices
    }

    pub fn indexer(&self) -> &StateIndexer {
        &self.indexer
    }

    /// Number of states in this subspace.
    pub fn num_states(&self) -> usize {
        self.indexer.len()
    }

    /// Feature names joined with `+`, e.g. `"x"` or `"x+y"`.
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Projects a full-space observation onto this subspace and returns the
    /// dense index of the projected tuple. Many-to-one over the full-space.
    pub fn project(&self, observation: &[u16]) -> Result<usize, SpaceError> {
        let mut selected = [0u16; 16];
        if self.feature_indices.len() > selected.len() {
            let vals: Vec<u16> = self
                .feature_indices
                .iter()
                .map(|&i| observation[i])
                .collect();
            return self.indexer.index(&vals);
        }
        for (k, &i) in self.feature_indices.iter().enumerate() {
            if i >= observation.len() {
                return Err(SpaceError::ArityMismatch {
                    got: observation.len(),
                    want: i + 1,
                });
            }
            selected[k] = observation[i];
        }
        self.indexer.index(&selected[..self.feature_indices.len()])
    }
}

/// The full-space plus the list of subspaces an agent maintains models for.
///
/// Families are configuration data: any set of distinct, non-full subspaces
/// is accepted, including the empty set (which degenerates to learning on the
/// full-space only).
#[derive(Debug, Clone)]
pub struct SpaceFamily {
    features: FeatureSpace,
    full: SubspaceDef,
    subs: Vec<SubspaceDef>,
}

impl SpaceFamily {
    pub fn new(features: FeatureSpace, subspaces: Vec<Vec<usize>>) -> Result<Self, SpaceError> {
        let all: Vec<usize> = (0..features.len()).collect();
        let full = SubspaceDef::new(&features, all.clone())?;
        let mut subs = Vec::with_capacity(subspaces.len());
        for indices in subspaces {
            let def = SubspaceDef::new(&features, indices)?;
            if def.feature_indices() == all.as_slice() {
                return Err(SpaceError::SubspaceEqualsFull);
            }
            if subs
                .iter()
                .any(|s: &SubspaceDef| s.feature_indices() == def.feature_indices())
            {
                return Err(SpaceError::DuplicateSubspace);
            }
            subs.push(def);
        }
        Ok(Self {
            features,
            full,
            subs,
        })
    }

    /// Builds a family from subspace descriptions given as feature names.
    pub fn from_names(
        features: FeatureSpace,
        subspaces: &[Vec<String>],
    ) -> Result<Self, SpaceError> {
        let mut index_sets = Vec::with_capacity(subspaces.len());
        for names in subspaces {
            let mut indices = Vec::with_capacity(names.len());
            for n in names {
                indices.push(features.index_of(n)?);
            }
            indices.sort_unstable();
            index_sets.push(indices);
        }
        Self::new(features, index_sets)
    }

    /// The default family: one singleton subspace per declared feature.
    pub fn singletons(features: FeatureSpace) -> Self {
        let subs: Vec<Vec<usize>> = (0..features.len()).map(|i| vec![i]).collect();
        Self::new(features, subs).expect("singleton family is always valid")
    }

    /// Family with no subspaces at all; the agent degenerates to a plain
    /// full-space learner.
    pub fn full_only(features: FeatureSpace) -> Self {
        Self::new(features, Vec::new()).expect("empty family is always valid")
    }

    pub fn features(&self) -> &FeatureSpace {
        &self.features
    }

    pub fn full(&self) -> &SubspaceDef {
        &self.full
    }

    pub fn subspaces(&self) -> &[SubspaceDef] {
        &self.subs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn xy_space(width: u16, height: u16) -> FeatureSpace {
        FeatureSpace::new(vec![
            FeatureDef::new("x", 1, width),
            FeatureDef::new("y", 1, height),
        ])
    }

    #[test]
    fn single_feature_projection_selects_value() {
        let space = xy_space(5, 5);
        let sub = SubspaceDef::new(&space, vec![0]).unwrap();
        // state (3, 2) onto {x}: dense index of value 3 is 3 - lo = 2
        assert_eq!(sub.project(&[3, 2]).unwrap(), 2);
        assert_eq!(sub.num_states(), 5);
    }

    #[test]
    fn full_projection_is_a_bijection() {
        let space = xy_space(4, 3);
        let full = SubspaceDef::new(&space, vec![0, 1]).unwrap();
        let mut seen = vec![false; full.num_states()];
        for x in 1..=4u16 {
            for y in 1..=3u16 {
                let i = full.project(&[x, y]).unwrap();
                assert!(!seen[i], "collision at {i}");
                seen[i] = true;
                assert_eq!(full.indexer().values(i), vec![x, y]);
            }
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn five_by_five_column_subspace_has_five_preimages() {
        let space = xy_space(5, 5);
        let sub = SubspaceDef::new(&space, vec![0]).unwrap();
        let mut preimage_counts = vec![0usize; sub.num_states()];
        for x in 1..=5u16 {
            for y in 1..=5u16 {
                preimage_counts[sub.project(&[x, y]).unwrap()] += 1;
            }
        }
        assert!(preimage_counts.iter().all(|&c| c == 5));
        // preimage sizes over subspace states partition the full-space
        assert_eq!(preimage_counts.iter().sum::<usize>(), 25);
    }

    #[test]
    fn singleton_families_match_sensor_modes() {
        let two = SpaceFamily::singletons(xy_space(10, 10));
        assert_eq!(two.subspaces().len(), 2);
        assert_eq!(two.subspaces()[0].name(), "x");
        assert_eq!(two.subspaces()[1].name(), "y");

        let six_space = FeatureSpace::new(vec![
            FeatureDef::new("x", 1, 10),
            FeatureDef::new("y", 1, 10),
            FeatureDef::new("ir_up", 0, 1),
            FeatureDef::new("ir_right", 0, 1),
            FeatureDef::new("ir_down", 0, 1),
            FeatureDef::new("ir_left", 0, 1),
        ]);
        let six = SpaceFamily::singletons(six_space);
        assert_eq!(six.subspaces().len(), 6);
    }

    #[test]
    fn multi_feature_subspace_override_accepted() {
        let space = FeatureSpace::new(vec![
            FeatureDef::new("x", 1, 7),
            FeatureDef::new("y", 1, 5),
            FeatureDef::new("ir_up", 0, 1),
            FeatureDef::new("ir_right", 0, 1),
            FeatureDef::new("ir_down", 0, 1),
            FeatureDef::new("ir_left", 0, 1),
        ]);
        let fam =
            SpaceFamily::from_names(space, &[vec!["x".to_string(), "y".to_string()]]).unwrap();
        assert_eq!(fam.subspaces()[0].num_states(), 35);
        assert_eq!(fam.subspaces()[0].name(), "x+y");
    }

    #[test]
    fn family_rejects_duplicates_and_full_set() {
        let space = xy_space(3, 3);
        assert_eq!(
            SpaceFamily::new(space.clone(), vec![vec![0], vec![0]]).unwrap_err(),
            SpaceError::DuplicateSubspace
        );
        assert_eq!(
            SpaceFamily::new(space.clone(), vec![vec![0, 1]]).unwrap_err(),
            SpaceError::SubspaceEqualsFull
        );
        assert_eq!(
            SpaceFamily::new(space, vec![vec![]]).unwrap_err(),
            SpaceError::EmptySubspace
        );
    }

    #[test]
    fn out_of_range_feature_is_rejected() {
        let space = xy_space(5, 5);
        let sub = SubspaceDef::new(&space, vec![1]).unwrap();
        assert!(matches!(
            sub.project(&[3, 9]),
            Err(SpaceError::FeatureOutOfRange { .. })
        ));
    }

    proptest! {
        // states equal on the selected features project to the same index
        #[test]
        fn projection_ignores_unselected_features(
            x in 1u16..=6, y1 in 1u16..=4, y2 in 1u16..=4
        ) {
            let space = xy_space(6, 4);
            let sub = SubspaceDef::new(&space, vec![0]).unwrap();
            prop_assert_eq!(
                sub.project(&[x, y1]).unwrap(),
                sub.project(&[x, y2]).unwrap()
            );
        }

        // indexer round-trips exactly over its whole range
        #[test]
        fn indexer_round_trip(w in 1u16..=7, h in 1u16..=7, b in 0u16..=1) {
            let space = FeatureSpace::new(vec![
                FeatureDef::new("x", 1, w),
                FeatureDef::new("y", 1, h),
                FeatureDef::new("bit", 0, 1),
            ]);
            let full = SubspaceDef::new(&space, vec![0, 1, 2]).unwrap();
            let idx = full.project(&[w, h, b]).unwrap();
            prop_assert_eq!(full.indexer().values(idx), vec![w, h, b]);
        }
    }
}
