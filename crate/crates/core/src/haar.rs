//! Haar sampling on `O(n)` and `U(m)` and the deterministic parallel Monte
//! Carlo driver shared by the averaging routines.
//!
//! Samples are drawn in fixed-size chunks; chunk `c` uses stream `c` of a
//! ChaCha8 generator seeded with the user seed. Chunk sums are combined in
//! chunk order, so results do not depend on the number of worker threads.

use std::sync::OnceLock;

use nalgebra::{Complex, DMatrix};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

pub const CHUNK: usize = 1024;

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "NILSPHERICAL_THREADS";

pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of `diag(R)` absorbed into `Q`.
pub fn haar_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Deterministic stream of `count` Haar orthogonal matrices.
pub fn haar_stream(seed: u64, n: usize, count: usize) -> impl Iterator<Item = DMatrix<f64>> {
    let mut rng = substream(seed, 0);
    (0..count).map(move |_| haar_orthogonal(n, &mut rng))
}

/// Haar-distributed unitary matrix, phase-fixed the same way.
pub fn haar_unitary<R: Rng + ?Sized>(m: usize, rng: &mut R) -> DMatrix<Complex<f64>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let g = DMatrix::<Complex<f64>>::from_fn(m, m, |_, _| {
        Complex::new(s * rng.sample::<f64, _>(StandardNormal), s * rng.sample::<f64, _>(StandardNormal))
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..m {
        let d = r[(j, j)];
        let norm = d.norm();
        if norm > 0.0 {
            let phase = d / norm;
            for i in 0..m {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub mean: Complex64,
    pub std_err: f64,
    pub samples: usize,
}

fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&t| t > 0)
        {
            b = b.num_threads(t);
        }
        b.build().expect("rayon pool")
    })
}

/// Run `f` on the crate's worker pool.
pub fn install<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    pool().install(f)
}

#[derive(Default, Clone, Copy)]
struct Neumaier {
    sum: f64,
    c: f64,
}

impl Neumaier {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.c += (self.sum - t) + v;
        } else {
            self.c += (v - t) + self.sum;
        }
        self.sum = t;
    }
    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// Compensated sum, used wherever long series are accumulated.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut acc = Neumaier::default();
    for v in it {
        acc.add(v);
    }
    acc.value()
}

/// Mean of `f(rng)` over `samples` draws.
pub fn mc_mean<F>(samples: usize, seed: u64, f: F) -> McEstimate
where
    F: Fn(&mut ChaCha8Rng) -> Complex64 + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<[f64; 3]> = install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = substream(seed, c as u64);
                let count = CHUNK.min(samples - c * CHUNK);
                let (mut re, mut im, mut sq) =
                    (Neumaier::default(), Neumaier::default(), Neumaier::default());
                for _ in 0..count {
                    let v = f(&mut rng);
                    re.add(v.re);
                    im.add(v.im);
                    sq.add(v.norm_sqr());
                }
                [re.value(), im.value(), sq.value()]
            })
            .collect()
    });
    let mut tot = [Neumaier::default(); 3];
    for p in &partial {
        for (t, v) in tot.iter_mut().zip(p) {
            t.add(*v);
        }
    }
    let nf = samples.max(1) as f64;
    let mean = Complex64::new(tot[0].value() / nf, tot[1].value() / nf);
    let var = (tot[2].value() / nf - mean.norm_sqr()).max(0.0);
    McEstimate {
        mean,
        std_err: (var / nf).sqrt(),
        samples,
    }
}
