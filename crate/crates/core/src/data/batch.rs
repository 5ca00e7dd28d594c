use crate::data::{Dataset, ExampleBatch};
use crate::error::{Error, Result};
use crate::numeric::Rng;

fn check_fraction(test_fraction: f64) -> Result<()> {
    if test_fraction > 0.0 && test_fraction < 1.0 {
        Ok(())
    } else {
        Err(Error::config(
            "test_fraction",
            format!("must lie in (0, 1), got {test_fraction}"),
        ))
    }
}

/// Independent per-row Bernoulli(test_fraction) assignment. Returns
/// `(train, test)`; row order is preserved inside each part.
pub fn split_train_test(data: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    check_fraction(test_fraction)?;
    let mut rng = Rng::new(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for r in 0..data.len() {
        if rng.bernoulli(test_fraction) {
            test.push(r);
        } else {
            train.push(r);
        }
    }
    Ok((data.gather(&train), data.gather(&test)))
}

/// Leading rows to train, trailing `test_fraction` to test; keeps any
/// chronological ordering of the file.
pub fn split_head_tail(data: &Dataset, test_fraction: f64) -> Result<(Dataset, Dataset)> {
    check_fraction(test_fraction)?;
    let n_test = (data.len() as f64 * test_fraction).round() as usize;
    let cut = data.len() - n_test;
    let head: Vec<usize> = (0..cut).collect();
    let tail: Vec<usize> = (cut..data.len()).collect();
    Ok((data.gather(&head), data.gather(&tail)))
}

/// Mini-batches over a dataset; the last batch may be short.
pub struct Batches<'a> {
    data: &'a Dataset,
    order: Vec<usize>,
    batch_size: usize,
    pos: usize,
}

impl Iterator for Batches<'_> {
    type Item = ExampleBatch;

    fn next(&mut self) -> Option<ExampleBatch> {
        if self.pos >= self.order.len() {
            return None;
        }
        let end = (self.pos + self.batch_size).min(self.order.len());
        let batch = self.data.gather(&self.order[self.pos..end]);
        self.pos = end;
        Some(batch)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.order.len() - self.pos).div_ceil(self.batch_size);
        (left, Some(left))
    }
}

impl ExactSizeIterator for Batches<'_> {}

/// Batches in file order, or shuffled with `shuffle_seed`.
pub fn batches(data: &Dataset, batch_size: usize, shuffle_seed: Option<u64>) -> Result<Batches<'_>> {
    if batch_size == 0 {
        return Err(Error::config("batch_size", "must be >= 1"));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    if let Some(seed) = shuffle_seed {
        Rng::new(seed).shuffle(&mut order);
    }
    Ok(Batches {
        data,
        order,
        batch_size,
        pos: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Example;

    fn numbered(n: usize) -> Dataset {
        let mut d = ExampleBatch::new(2);
        for i in 0..n {
            d.push(&Example {
                label: (i % 2) as u8,
                indices: vec![i as u32, (i * 7) as u32],
                values: vec![1.0, 1.0],
            })
            .unwrap();
        }
        d
    }

    fn ids(d: &Dataset) -> Vec<u32> {
        (0..d.len()).map(|r| d.row_indices(r)[0]).collect()
    }

    #[test]
    fn batch_sizes() {
        let d = numbered(10);
        let sizes: Vec<usize> = batches(&d, 4, None).unwrap().map(|b| b.len()).collect();
        assert_eq!(sizes, vec![4, 4, 2]);
        assert!(batches(&d, 0, None).is_err());
    }

    #[test]
    fn shuffle_is_seeded_permutation() {
        let d = numbered(50);
        let a: Vec<u32> = batches(&d, 7, Some(3)).unwrap().flat_map(|b| ids(&b)).collect();
        let b: Vec<u32> = batches(&d, 7, Some(3)).unwrap().flat_map(|b| ids(&b)).collect();
        assert_eq!(a, b);
        assert_ne!(a, ids(&d));
        let mut sorted = a.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, ids(&d));
    }

    #[test]
    fn split_share_and_partition() {
        let d = numbered(100_000);
        let (train, test) = split_train_test(&d, 0.1, 42).unwrap();
        let share = test.len() as f64 / d.len() as f64;
        assert!((share - 0.1).abs() < 0.01, "{share}");
        let mut all: Vec<u32> = ids(&train).into_iter().chain(ids(&test)).collect();
        all.sort_unstable();
        assert_eq!(all, ids(&d));

        let (train2, test2) = split_train_test(&d, 0.1, 42).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);
    }

    #[test]
    fn split_rejects_bad_fraction() {
        let d = numbered(3);
        assert!(split_train_test(&d, 0.0, 1).is_err());
        assert!(split_train_test(&d, 1.0, 1).is_err());
        assert!(split_head_tail(&d, 1.5).is_err());
    }

    #[test]
    fn head_tail_keeps_order() {
        let d = numbered(10);
        let (train, test) = split_head_tail(&d, 0.2).unwrap();
        assert_eq!(ids(&train), (0..8).collect::<Vec<u32>>());
        assert_eq!(ids(&test), vec![8, 9]);
    }
}
