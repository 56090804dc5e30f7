//! Vertical feature partitioning and the labeled-intersection split.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::{stream, Domain};

/// Feature-column sets, one per guest, in guest-id order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerticalPartitionSpec {
    pub features: Vec<Vec<usize>>,
}

impl VerticalPartitionSpec {
    /// `guests` contiguous column bands covering `0..dim`. For a row-major
    /// image this is a stack of horizontal strips, top to bottom. When
    /// `dim` does not divide evenly the leading bands take one extra column.
    pub fn contiguous_bands(dim: usize, guests: usize) -> Result<Self> {
        if guests == 0 || guests > dim {
            return Err(Error::Config(format!(
                "cannot cut {dim} features into {guests} bands"
            )));
        }
        let base = dim / guests;
        let extra = dim % guests;
        let mut start = 0;
        let features = (0..guests)
            .map(|g| {
                let w = base + usize::from(g < extra);
                let band = (start..start + w).collect();
                start += w;
                band
            })
            .collect();
        Ok(Self { features })
    }

    pub fn guests(&self) -> usize {
        self.features.len()
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::Config("partition has no guests".into()));
        }
        let mut seen = BTreeSet::new();
        for (g, cols) in self.features.iter().enumerate() {
            if cols.is_empty() {
                return Err(Error::Config(format!("guest {g} has no features")));
            }
            for &c in cols {
                if c >= dim {
                    return Err(Error::Config(format!(
                        "guest {g} feature {c} outside 0..{dim}"
                    )));
                }
                if !seen.insert(c) {
                    return Err(Error::Config(format!(
                        "feature {c} assigned to more than one guest"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One unlabeled dataset per guest, sharing `d`'s entity ids.
pub fn vertical_split(d: &Dataset, spec: &VerticalPartitionSpec) -> Result<Vec<Dataset>> {
    spec.validate(d.dim())?;
    spec.features
        .iter()
        .map(|cols| d.select_features(cols))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntersectionSpec {
    pub labeled_count: usize,
    pub guests: usize,
    pub seed: u64,
}

/// Entity ids of the labeled intersection and of each guest's private window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntersectionSplit {
    pub aligned: Vec<usize>,
    pub windows: Vec<Vec<usize>>,
}

impl IntersectionSplit {
    /// Guest `g`'s local training ids: the intersection followed by its window.
    /// Every guest's list has the same length, so a shared position
    /// permutation keeps intersection entities row-aligned.
    pub fn local_ids(&self, g: usize) -> Vec<usize> {
        let mut ids = self.aligned.clone();
        ids.extend_from_slice(&self.windows[g]);
        ids
    }
}

/// The first `labeled_count` entities (dataset order) form the labeled
/// intersection. The rest are shuffled and cut into equal windows, one per
/// guest; the remainder is dropped.
pub fn build_intersection_split(d: &Dataset, spec: &IntersectionSpec) -> Result<IntersectionSplit> {
    let n = d.len();
    if spec.labeled_count >= n {
        return Err(Error::Config(format!(
            "labeled_count {} must be below the sample count {n}",
            spec.labeled_count
        )));
    }
    if spec.labeled_count == 0 {
        return Err(Error::Config("labeled_count must be positive".into()));
    }
    if spec.guests == 0 {
        return Err(Error::Config(
            "intersection split needs at least one guest".into(),
        ));
    }
    let ids = d.entity_ids();
    let aligned = ids[..spec.labeled_count].to_vec();
    let mut rest = ids[spec.labeled_count..].to_vec();
    rest.shuffle(&mut stream(spec.seed, Domain::IntersectionShuffle, 0));
    let w = rest.len() / spec.guests;
    if w == 0 {
        return Err(Error::Config(format!(
            "{} unlabeled samples cannot give each of {} guests a window",
            rest.len(),
            spec.guests
        )));
    }
    let windows = rest
        .chunks_exact(w)
        .take(spec.guests)
        .map(<[usize]>::to_vec)
        .collect();
    Ok(IntersectionSplit { aligned, windows })
}

/// Sorted intersection of entity-id sets.
pub fn align_entities(sets: &[Vec<usize>]) -> Result<Vec<usize>> {
    let Some((first, rest)) = sets.split_first() else {
        return Err(Error::Config("no entity sets to align".into()));
    };
    let mut common: BTreeSet<usize> = first.iter().copied().collect();
    for s in rest {
        let other: BTreeSet<usize> = s.iter().copied().collect();
        common.retain(|id| other.contains(id));
    }
    if common.is_empty() {
        return Err(Error::Config(
            "entity sets have an empty intersection".into(),
        ));
    }
    Ok(common.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Matrix;

    fn seq(n: usize, dim: usize) -> Dataset {
        let data = (0..n * dim).map(|v| v as f64).collect();
        Dataset::with_sequential_ids(Matrix::from_vec(n, dim, data).unwrap(), Some(vec![0; n]))
            .unwrap()
    }

    #[test]
    fn mnist_bands_are_seven_pixel_rows() {
        let s = VerticalPartitionSpec::contiguous_bands(784, 4).unwrap();
        for (g, band) in s.features.iter().enumerate() {
            assert_eq!(band.len(), 196);
            assert_eq!(band[0], g * 7 * 28);
        }
    }

    #[test]
    fn split_recomposes_exactly() {
        let d = seq(3, 4);
        let spec = VerticalPartitionSpec {
            features: vec![vec![0, 1], vec![2, 3]],
        };
        let parts = vertical_split(&d, &spec).unwrap();
        let joined = Matrix::hcat(&[parts[0].features(), parts[1].features()]).unwrap();
        assert_eq!(&joined, d.features());
        assert!(parts.iter().all(|p| p.labels().is_none()));
    }

    #[test]
    fn overlapping_sets_are_rejected() {
        let spec = VerticalPartitionSpec {
            features: vec![vec![0, 1], vec![1, 2]],
        };
        assert!(vertical_split(&seq(2, 3), &spec).is_err());
    }

    #[test]
    fn paper_window_sizes() {
        let d = Dataset::with_sequential_ids(Matrix::zeros(60000, 1), None).unwrap();
        let spec = IntersectionSpec {
            labeled_count: 1024,
            guests: 4,
            seed: 0,
        };
        let s = build_intersection_split(&d, &spec).unwrap();
        assert_eq!(s.aligned, (0..1024).collect::<Vec<_>>());
        for g in 0..4 {
            assert_eq!(s.windows[g].len(), 14744);
            assert_eq!(s.local_ids(g).len(), 15768);
        }
    }

    #[test]
    fn one_unaligned_sample_each_at_the_boundary() {
        let d = seq(10, 1);
        let spec = IntersectionSpec {
            labeled_count: 6,
            guests: 4,
            seed: 3,
        };
        let s = build_intersection_split(&d, &spec).unwrap();
        assert!(s.windows.iter().all(|w| w.len() == 1));
        let spec = IntersectionSpec {
            labeled_count: 10,
            ..spec
        };
        assert!(build_intersection_split(&d, &spec).is_err());
    }

    #[test]
    fn align_identical_and_disjoint() {
        assert_eq!(
            align_entities(&[vec![3, 1, 2], vec![2, 3, 1]]).unwrap(),
            vec![1, 2, 3]
        );
        assert!(align_entities(&[vec![1], vec![2]]).is_err());
    }
}
