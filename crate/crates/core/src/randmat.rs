//! Transfer matrices of bounded-jump walks and their Lyapunov spectrum.

use serde::{Deserialize, Serialize};

use crate::envgen::{AtomSampler, EnvironmentLaw};
use crate::error::{Error, Result};
use crate::rng::{self, domain, CounterRng};

pub const BATCHES: usize = 100;
/// Steps the frame is evolved through (sites `-BURN_IN+1..=0`) before anything is accumulated.
pub const BURN_IN: usize = 1000;

/// Companion-form matrix of order `d = L + R - 1`.
///
/// Top row `[a(R-1) .. a(1), b(1) .. b(L)]` with
/// `a(i) = -(p(i) + .. + p(R)) / p(R)` and `b(i) = (p(-i) + .. + p(-L)) / p(R)`;
/// below it a shifted identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix {
    pub left: usize,
    pub right: usize,
    pub top: Vec<f64>,
}

impl TransferMatrix {
    pub fn order(&self) -> usize {
        self.top.len()
    }

    /// Dense row-major entries.
    pub fn dense(&self) -> Vec<f64> {
        let d = self.order();
        let mut m = vec![0.0; d * d];
        m[..d].copy_from_slice(&self.top);
        for i in 1..d {
            m[i * d + i - 1] = 1.0;
        }
        m
    }

    /// `y = M x` in place for a vector of length `d`.
    #[inline]
    pub fn apply(&self, x: &mut [f64]) {
        let head: f64 = self.top.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
        x.copy_within(0..x.len() - 1, 1);
        x[0] = head;
    }

    /// `ln |det M|`; the determinant of the companion form is `±` the last top entry.
    pub fn log_abs_det(&self) -> f64 {
        self.top[self.order() - 1].abs().ln()
    }
}

/// Builds the transfer matrix from a jump vector indexed `-L..=R`
/// (`p[0] = p(-L)`, `p[L] = p(0)`, `p[L + R] = p(R)`).
pub fn transfer_matrix(p: &[f64], left: usize, right: usize) -> Result<TransferMatrix> {
    if left == 0 || right == 0 {
        return Err(Error::InvalidArgument("L and R must be positive".into()));
    }
    if p.len() != left + right + 1 {
        return Err(Error::InvalidArgument(format!("jump vector has {} entries, expected {}", p.len(), left + right + 1)));
    }
    let at = |i: i64| p[(i + left as i64) as usize];
    let p_r = at(right as i64);
    let p_l = at(-(left as i64));
    if !(p_r > 0.0) || !(p_l > 0.0) {
        return Err(Error::InvalidArgument(format!("boundary jumps p(-L) = {p_l}, p(R) = {p_r} must be positive")));
    }
    let mut top = Vec::with_capacity(left + right - 1);
    for i in (1..right as i64).rev() {
        let tail: f64 = (i..=right as i64).map(at).sum();
        top.push(-tail / p_r);
    }
    for i in 1..=left as i64 {
        let tail: f64 = (i..=left as i64).map(|j| at(-j)).sum();
        top.push(tail / p_r);
    }
    Ok(TransferMatrix { left, right, top })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSpectrum {
    /// `γ_1 >= .. >= γ_k`.
    pub gammas: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub n: usize,
    pub seed: u64,
    /// Frames that had to be re-drawn after collapsing.
    pub restarts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundedClass {
    TransientPlus,
    TransientMinus,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundedClassification {
    pub class: BoundedClass,
    pub gamma_r: f64,
    pub std_error: f64,
    pub spectrum: LyapunovSpectrum,
}

fn bounded_law(law: &EnvironmentLaw) -> Result<(usize, usize, Vec<TransferMatrix>)> {
    law.check()?;
    match law {
        EnvironmentLaw::BoundedJump { left, right, atoms } => {
            let mats = atoms.iter().map(|a| transfer_matrix(&a.probs, *left, *right)).collect::<Result<Vec<_>>>()?;
            Ok((*left, *right, mats))
        }
        _ => Err(Error::WrongModel { expected: "bounded-jump", found: law.model().name() }),
    }
}

/// Modified Gram-Schmidt (applied twice) on `k` columns of length `d`,
/// stored column-major. Returns the diagonal of `R`.
fn orthonormalize(frame: &mut [f64], d: usize, k: usize, diag: &mut [f64]) {
    for j in 0..k {
        let mut norm2 = 0.0;
        for pass in 0..2 {
            for i in 0..j {
                let (done, rest) = frame.split_at_mut(j * d);
                let qi = &done[i * d..(i + 1) * d];
                let qj = &mut rest[..d];
                let dot: f64 = qi.iter().zip(qj.iter()).map(|(a, b)| a * b).sum();
                for (b, a) in qj.iter_mut().zip(qi) {
                    *b -= dot * a;
                }
            }
            if pass == 1 || j == 0 {
                break;
            }
        }
        let col = &mut frame[j * d..(j + 1) * d];
        for v in col.iter() {
            norm2 += v * v;
        }
        let norm = norm2.sqrt();
        diag[j] = norm;
        if norm > 0.0 && norm.is_finite() {
            for v in col.iter_mut() {
                *v /= norm;
            }
        }
    }
}

fn random_frame(rng: &mut CounterRng, d: usize, k: usize) -> Vec<f64> {
    let mut frame: Vec<f64> = (0..d * k).map(|_| rng.next_normal()).collect();
    let mut diag = vec![0.0; k];
    orthonormalize(&mut frame, d, k, &mut diag);
    frame
}

/// Estimates `γ_1, .., γ_k` by evolving an orthonormal `k`-frame through
/// `M_n .. M_1` (matrix `M_x` built from the jump vector at site `x` of the
/// environment `(law, seed)`), re-orthonormalizing every `cadence` steps.
pub fn lyapunov_spectrum_with_cadence(law: &EnvironmentLaw, k: usize, n: usize, seed: u64, cadence: usize) -> Result<LyapunovSpectrum> {
    let (_, _, mats) = bounded_law(law)?;
    let d = mats[0].order();
    if k < 1 || k > d {
        return Err(Error::InvalidArgument(format!("k = {k} must lie in 1..={d}")));
    }
    if n < BATCHES {
        return Err(Error::InvalidArgument(format!("need at least {BATCHES} steps, got {n}")));
    }
    let cadence = cadence.max(1);
    let sampler = AtomSampler::new(law, seed);
    let mut frame_rng = CounterRng::new(rng::derive_key(seed, domain::FRAME, &[]));
    let mut frame = random_frame(&mut frame_rng, d, k);
    let mut diag = vec![0.0; k];
    let mut restarts = 0;
    // align the frame with the leading directions so the start-up transient
    // does not leak into the averages
    for site in (1 - BURN_IN as i64)..=0 {
        let m = &mats[sampler.index(site)];
        for col in frame.chunks_exact_mut(d) {
            m.apply(col);
        }
        orthonormalize(&mut frame, d, k, &mut diag);
        if diag.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
            frame = random_frame(&mut frame_rng, d, k);
        }
    }

    let mut total = vec![0.0; k];
    let batch_len = n / BATCHES;
    let mut batch_sums = vec![vec![0.0; k]; BATCHES];
    let mut batch_steps = vec![0usize; BATCHES];
    let mut pending = 0usize;

    for step in 1..=n {
        let m = &mats[sampler.index(step as i64)];
        for col in frame.chunks_exact_mut(d) {
            m.apply(col);
        }
        pending += 1;
        let batch = ((step - 1) / batch_len).min(BATCHES - 1);
        let batch_end = step == n || (step % batch_len == 0 && batch < BATCHES - 1);
        if pending == cadence || batch_end {
            orthonormalize(&mut frame, d, k, &mut diag);
            if diag.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
                restarts += 1;
                frame = random_frame(&mut frame_rng, d, k);
            } else {
                for j in 0..k {
                    let l = diag[j].ln();
                    total[j] += l;
                    batch_sums[batch][j] += l;
                }
            }
            batch_steps[batch] += pending;
            pending = 0;
        }
    }

    let gammas: Vec<f64> = total.iter().map(|t| t / n as f64).collect();
    let std_errors = (0..k)
        .map(|j| {
            let means: Vec<f64> = (0..BATCHES).map(|b| batch_sums[b][j] / batch_steps[b] as f64).collect();
            let m = means.iter().sum::<f64>() / BATCHES as f64;
            let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
            (var / BATCHES as f64).sqrt()
        })
        .collect();
    Ok(LyapunovSpectrum { gammas, std_errors, n, seed, restarts })
}

/// Spectrum with re-orthonormalization at every step.
pub fn lyapunov_spectrum(law: &EnvironmentLaw, k: usize, n: usize, seed: u64) -> Result<LyapunovSpectrum> {
    lyapunov_spectrum_with_cadence(law, k, n, seed, 1)
}

/// Top exponent `γ_1` and its batch-means standard error.
pub fn top_lyapunov(law: &EnvironmentLaw, n: usize, seed: u64) -> Result<(f64, f64)> {
    let s = lyapunov_spectrum(law, 1, n, seed)?;
    Ok((s.gammas[0], s.std_errors[0]))
}

/// Transience direction from the sign of `γ_R`; a 3-standard-error band around 0 is indeterminate.
pub fn classify_bounded(law: &EnvironmentLaw, n: usize, seed: u64) -> Result<BoundedClassification> {
    let (_, right, _) = bounded_law(law)?;
    let spectrum = lyapunov_spectrum(law, right, n, seed)?;
    let gamma_r = spectrum.gammas[right - 1];
    let std_error = spectrum.std_errors[right - 1];
    let class = if gamma_r + 3.0 * std_error < 0.0 {
        BoundedClass::TransientPlus
    } else if gamma_r - 3.0 * std_error > 0.0 {
        BoundedClass::TransientMinus
    } else {
        BoundedClass::Indeterminate
    };
    Ok(BoundedClassification { class, gamma_r, std_error, spectrum })
}

/// `E ln |det M|`, exact from the atoms.
pub fn mean_log_det(law: &EnvironmentLaw) -> Result<f64> {
    let (_, _, mats) = bounded_law(law)?;
    let EnvironmentLaw::BoundedJump { atoms, .. } = law else { unreachable!() };
    Ok(atoms.iter().zip(&mats).map(|(a, m)| a.weight * m.log_abs_det()).sum())
}
