//! Benchmark harness: serialized sizes, bottom-up evaluation times and edit
//! distance times, tree against DAG, as CSV records.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bottomup::{eval_dag, eval_tree, VertexCount};
use crate::editdist::{edit_distance, edit_distance_dag};
use crate::error::{Error, Result};
use crate::reduction::{expand_linear, from_linear, linear_size, random_linear_dag_direct_with, reduce, LinearDag};
use crate::trees::{random_tree_with, Tree};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchKind {
    /// Bytes of tree text against DAG text for random self-nested trees
    /// drawn with the height and outdegree of a random tree of each size.
    Space,
    /// Nanoseconds to evaluate the vertex count from the tree and from its
    /// linear DAG.
    BottomUp,
    /// Nanoseconds to compute the edit distance between two random trees,
    /// from the trees and from their reductions.
    Distance,
}

impl BenchKind {
    pub fn name(self) -> &'static str {
        match self {
            BenchKind::Space => "space",
            BenchKind::BottomUp => "bottomup",
            BenchKind::Distance => "distance",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "space" => Ok(BenchKind::Space),
            "bottomup" => Ok(BenchKind::BottomUp),
            "distance" => Ok(BenchKind::Distance),
            _ => Err(Error::Argument(format!(
                "unknown experiment {s:?}; expected space, bottomup or distance"
            ))),
        }
    }
}

/// One measurement. `value` is bytes for `space` and the median over
/// `reps` repetitions in nanoseconds for the timing experiments.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub experiment: String,
    pub instance: usize,
    /// Vertex count of the measured tree; a float because self-nested trees
    /// of moderate height can exceed 64-bit counts.
    pub size: f64,
    pub metric: String,
    pub value: f64,
    pub reps: usize,
}

pub const BENCH_CSV_HEADER: &str = "experiment,instance,size,metric,value,reps";

impl BenchRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.experiment, self.instance, self.size, self.metric, self.value, self.reps
        )
    }
}

pub fn write_csv<W: Write>(records: &[BenchRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{BENCH_CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Random linear DAG whose expansion has between `0.8 · target` and
/// `1.25 · target` vertices, drawn with random heights and degree bounds.
pub fn random_self_nested_near<R: Rng>(target: u64, rng: &mut R) -> Result<LinearDag> {
    if target <= 1 {
        return Ok(LinearDag::single_vertex());
    }
    let lo = (target as f64 * 0.8).floor() as u64;
    let hi = (target as f64 * 1.25).ceil() as u64;
    for _ in 0..100_000 {
        let height = rng.gen_range(1..=16);
        let degree = rng.gen_range(2..=6);
        let l = random_linear_dag_direct_with(height, degree, rng)?;
        if (lo..=hi).contains(&linear_size(&l)) {
            return Ok(l);
        }
    }
    Err(Error::Generation(format!("no self-nested tree near size {target} found")))
}

fn to_usize(size: u64) -> Result<usize> {
    usize::try_from(size.max(1)).map_err(|_| Error::Argument(format!("size {size} is too large")))
}

/// Random self-nested tree with the height and outdegree of a random tree of
/// size `n`, as a linear DAG with its (possibly huge) vertex count.
pub fn space_instance<R: Rng>(n: usize, rng: &mut R) -> Result<(LinearDag, f64)> {
    let t = random_tree_with(n, rng)?;
    let l = random_linear_dag_direct_with(t.height(), t.outdegree().max(1) as u64, rng)?;
    let mut sizes: Vec<f64> = Vec::with_capacity(l.rows().len());
    for row in l.rows() {
        let s = 1.0 + row.iter().zip(&sizes).map(|(&k, s)| k as f64 * s).sum::<f64>();
        sizes.push(s);
    }
    let size = *sizes.last().expect("at least one row");
    Ok((l, size))
}

/// Median wall time of `f` in nanoseconds. Each repetition runs `f` enough
/// times to last about a millisecond and reports the per-call time.
pub fn median_time<T>(reps: usize, mut f: impl FnMut() -> T) -> f64 {
    let start = Instant::now();
    std::hint::black_box(f());
    let once = start.elapsed().max(Duration::from_nanos(1));
    let inner = (1_000_000 / once.as_nanos()).clamp(1, 100_000) as u32;
    let mut samples: Vec<f64> = (0..reps.max(1))
        .map(|_| {
            let start = Instant::now();
            for _ in 0..inner {
                std::hint::black_box(f());
            }
            start.elapsed().as_nanos() as f64 / inner as f64
        })
        .collect();
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        (samples[n / 2 - 1] + samples[n / 2]) / 2.0
    }
}

/// Runs one experiment per entry of `sizes`; instance `i` uses a generator
/// seeded from `seed` on stream `i`.
pub fn run(kind: BenchKind, sizes: &[u64], reps: usize, seed: u64) -> Result<Vec<BenchRecord>> {
    if reps == 0 {
        return Err(Error::Argument("reps must be at least 1".into()));
    }
    let mut out = Vec::new();
    for (i, &size) in sizes.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let record = |size: f64, metric: &str, value: f64, reps: usize| BenchRecord {
            experiment: kind.name().into(),
            instance: i,
            size,
            metric: metric.into(),
            value,
            reps,
        };
        match kind {
            BenchKind::Space => {
                let (l, n) = space_instance(to_usize(size)?, &mut rng)?;
                // Tree text spends one '(' and one ')' per vertex.
                out.push(record(n, "tree_bytes", 2.0 * n, 1));
                out.push(record(n, "dag_bytes", from_linear(&l).to_text().len() as f64, 1));
            }
            BenchKind::BottomUp => {
                let l = random_self_nested_near(size, &mut rng)?;
                let t = expand_linear(&l);
                let d = from_linear(&l);
                let n = t.size() as f64;
                out.push(record(n, "tree_ns", median_time(reps, || eval_tree(&VertexCount, &t)), reps));
                out.push(record(n, "dag_ns", median_time(reps, || eval_dag(&VertexCount, &d)), reps));
            }
            BenchKind::Distance => {
                let n = to_usize(size)?;
                let t1: Tree = random_tree_with(n, &mut rng)?;
                let t2: Tree = random_tree_with(n, &mut rng)?;
                let (d1, d2) = (reduce(&t1), reduce(&t2));
                out.push(record(n as f64, "tree_ns", median_time(reps, || edit_distance(&t1, &t2)), reps));
                out.push(record(n as f64, "dag_ns", median_time(reps, || edit_distance_dag(&d1, &d2)), reps));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn near_sampler_hits_the_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for target in [2, 10, 1000, 50_000] {
            let s = linear_size(&random_self_nested_near(target, &mut rng).unwrap());
            assert!(s as f64 >= 0.8 * target as f64 - 1.0 && s as f64 <= 1.25 * target as f64 + 1.0);
        }
    }

    #[test]
    fn space_records() {
        let recs = run(BenchKind::Space, &[100, 1000], 1, 9).unwrap();
        assert_eq!(recs.len(), 4);
        assert_eq!(recs[0].metric, "tree_bytes");
        assert_eq!(recs[0].value, 2.0 * recs[0].size);
        assert_eq!(recs, run(BenchKind::Space, &[100, 1000], 1, 9).unwrap());
    }

    #[test]
    fn timing_records() {
        let recs = run(BenchKind::Distance, &[8], 3, 1).unwrap();
        assert_eq!(recs.iter().map(|r| r.metric.as_str()).collect::<Vec<_>>(), ["tree_ns", "dag_ns"]);
        assert!(recs.iter().all(|r| r.value > 0.0 && r.reps == 3));
        assert!(run(BenchKind::BottomUp, &[8], 0, 1).is_err());
        let mut buf = Vec::new();
        write_csv(&recs, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with(BENCH_CSV_HEADER));
    }

    #[test]
    fn space_instance_size_matches_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [1, 5, 30, 60] {
            let (l, size) = space_instance(n, &mut rng).unwrap();
            assert_eq!(size, linear_size(&l) as f64);
            let t = expand_linear(&l);
            assert_eq!(t.to_string().len() as f64, 2.0 * size);
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for k in [BenchKind::Space, BenchKind::BottomUp, BenchKind::Distance] {
            assert_eq!(BenchKind::parse(k.name()).unwrap(), k);
        }
        assert!(BenchKind::parse("disk").is_err());
    }
}
