use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::kernel::SampledKernel;
use crate::real::Real;

/// Evaluation path for `K_ε ∗ u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvMethod {
    /// Stencil sum over the kernel support.
    Direct,
    /// Zero-padded transform.
    Fft,
    /// Transform when the stencil has more than a few hundred offsets.
    Auto,
}

/// Smallest `p ≥ n` with no prime factor above 5.
pub fn smooth_size(n: usize) -> usize {
    let mut p = n.max(1);
    loop {
        let mut r = p;
        for f in [2, 3, 5] {
            while r % f == 0 {
                r /= f;
            }
        }
        if r == 1 {
            return p;
        }
        p += 1;
    }
}

struct Spectral<T: Real> {
    p: [usize; 3],
    /// Real kernel spectra, one per stored block entry.
    spectra: Vec<Vec<T>>,
    fwd: [Arc<dyn Fft<T>>; 3],
    inv: [Arc<dyn Fft<T>>; 3],
}

/// Discrete convolution `(K_ε∗u)(x) = Σ_z K_ε(z)u(x−z)h³` on a box, zero outside.
#[derive(Clone)]
pub struct Convolver<T: Real> {
    pub dims: [usize; 3],
    pub m: usize,
    pub isotropic: bool,
    pub method: ConvMethod,
    /// Stencil reach actually used (kernel radius capped by the box).
    pub reach: usize,
    /// Nonzero offsets with `h³`-weighted blocks.
    offsets: Vec<([isize; 3], Vec<T>)>,
    spectral: Option<Arc<Spectral<T>>>,
}

impl<T: Real> std::fmt::Debug for Convolver<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Convolver")
            .field("dims", &self.dims)
            .field("m", &self.m)
            .field("method", &self.method)
            .field("reach", &self.reach)
            .field("offsets", &self.offsets.len())
            .finish()
    }
}

fn transform<T: Real>(buf: &mut [Complex<T>], p: [usize; 3], plans: &[Arc<dyn Fft<T>>; 3]) {
    let (p0, p1, p2) = (p[0], p[1], p[2]);
    let plane = p1 * p2;
    buf.par_chunks_mut(plane).for_each(|pl| {
        let mut scratch = vec![Complex::default(); plans[2].get_inplace_scratch_len()];
        plans[2].process_with_scratch(pl, &mut scratch);
        let mut line = vec![Complex::default(); p1];
        let mut s1 = vec![Complex::default(); plans[1].get_inplace_scratch_len()];
        for k in 0..p2 {
            for j in 0..p1 {
                line[j] = pl[j * p2 + k];
            }
            plans[1].process_with_scratch(&mut line, &mut s1);
            for j in 0..p1 {
                pl[j * p2 + k] = line[j];
            }
        }
    });
    let mut tmp = vec![Complex::default(); buf.len()];
    {
        let src: &[Complex<T>] = buf;
        tmp.par_chunks_mut(p0).enumerate().for_each(|(jk, line)| {
            for i in 0..p0 {
                line[i] = src[i * plane + jk];
            }
        });
    }
    tmp.par_chunks_mut(p0 * 64).for_each(|lines| {
        let mut scratch = vec![Complex::default(); plans[0].get_inplace_scratch_len()];
        plans[0].process_with_scratch(lines, &mut scratch);
    });
    buf.par_chunks_mut(plane).enumerate().for_each(|(i, pl)| {
        for jk in 0..plane {
            pl[jk] = tmp[jk * p0 + i];
        }
    });
}

impl<T: Real> Convolver<T> {
    pub fn new(kernel: &SampledKernel<T>, dims: [usize; 3], method: ConvMethod) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidInput("empty box".into()));
        }
        let reach = kernel.radius.min(dims.iter().copied().min().unwrap() - 1);
        let k = kernel.truncated(reach);
        let h3 = kernel.cell_volume();
        let offsets: Vec<([isize; 3], Vec<T>)> = k
            .support()
            .into_iter()
            .map(|(z, idx)| {
                let b = k.block();
                (z, k.values[idx * b..(idx + 1) * b].iter().map(|&v| v * h3).collect())
            })
            .collect();
        let method = match method {
            ConvMethod::Auto => {
                if offsets.len() > 343 {
                    ConvMethod::Fft
                } else {
                    ConvMethod::Direct
                }
            }
            other => other,
        };
        let mut conv = Convolver { dims, m: kernel.m, isotropic: kernel.isotropic, method, reach, offsets, spectral: None };
        if method == ConvMethod::Fft {
            conv.spectral = Some(Arc::new(conv.build_spectral()));
        }
        Ok(conv)
    }

    /// Offsets with their `h³`-weighted blocks.
    pub fn stencil(&self) -> &[([isize; 3], Vec<T>)] {
        &self.offsets
    }

    fn block(&self) -> usize {
        if self.isotropic {
            1
        } else {
            self.m * self.m
        }
    }

    fn build_spectral(&self) -> Spectral<T> {
        let p = [0, 1, 2].map(|a| smooth_size(self.dims[a] + self.reach));
        let mut planner = FftPlanner::<T>::new();
        let fwd = [0, 1, 2].map(|a| planner.plan_fft_forward(p[a]));
        let inv = [0, 1, 2].map(|a| planner.plan_fft_inverse(p[a]));
        let total = p[0] * p[1] * p[2];
        let b = self.block();
        let mut spectra = Vec::with_capacity(b);
        for e in 0..b {
            let mut buf = vec![Complex::<T>::default(); total];
            for (z, v) in &self.offsets {
                let w = [0, 1, 2].map(|a| z[a].rem_euclid(p[a] as isize) as usize);
                buf[(w[0] * p[1] + w[1]) * p[2] + w[2]].re = v[e];
            }
            transform(&mut buf, p, &fwd);
            // an even real kernel has a real spectrum
            spectra.push(buf.into_iter().map(|c| c.re).collect());
        }
        Spectral { p, spectra, fwd, inv }
    }

    fn mat_vec(&self, blk: &[T], u: &[T], out: &mut [T]) {
        let m = self.m;
        if self.isotropic {
            for a in 0..m {
                out[a] = out[a] + blk[0] * u[a];
            }
        } else {
            for a in 0..m {
                let mut s = T::zero();
                for b in 0..m {
                    s = s + blk[a * m + b] * u[b];
                }
                out[a] = out[a] + s;
            }
        }
    }

    /// `K_ε∗u` at the listed cells by stencil summation.
    pub fn apply_at(&self, u: &[T], targets: &[usize]) -> Vec<T> {
        let m = self.m;
        let [n0, n1, n2] = self.dims;
        let mut out = vec![T::zero(); targets.len() * m];
        out.par_chunks_mut(m).zip(targets.par_iter()).for_each(|(o, &x)| {
            let i = (x / (n1 * n2)) as isize;
            let j = ((x / n2) % n1) as isize;
            let k = (x % n2) as isize;
            for (z, blk) in &self.offsets {
                let (a, b, c) = (i - z[0], j - z[1], k - z[2]);
                if a < 0 || b < 0 || c < 0 || a >= n0 as isize || b >= n1 as isize || c >= n2 as isize {
                    continue;
                }
                let y = ((a as usize) * n1 + b as usize) * n2 + c as usize;
                self.mat_vec(blk, &u[y * m..(y + 1) * m], o);
            }
        });
        out
    }

    pub fn apply_direct(&self, u: &[T]) -> Vec<T> {
        let all: Vec<usize> = (0..self.len()).collect();
        self.apply_at(u, &all)
    }

    fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    /// `K_ε∗u` on the whole box by the configured method.
    pub fn apply(&self, u: &[T]) -> Vec<T> {
        match self.method {
            ConvMethod::Fft => self.apply_fft(u),
            _ => self.apply_direct(u),
        }
    }

    pub fn apply_fft(&self, u: &[T]) -> Vec<T> {
        let owned;
        let sp = match &self.spectral {
            Some(s) => s.as_ref(),
            None => {
                owned = self.build_spectral();
                &owned
            }
        };
        let m = self.m;
        let p = sp.p;
        let total = p[0] * p[1] * p[2];
        let [n0, n1, n2] = self.dims;
        let scale = T::one() / T::from_usize_lossy(total);
        let embed = |a: usize, b: Option<usize>| -> Vec<Complex<T>> {
            let mut buf = vec![Complex::<T>::default(); total];
            for i in 0..n0 {
                for j in 0..n1 {
                    for k in 0..n2 {
                        let x = (i * n1 + j) * n2 + k;
                        let d = (i * p[1] + j) * p[2] + k;
                        buf[d] = Complex::new(u[x * m + a], b.map_or(T::zero(), |b| u[x * m + b]));
                    }
                }
            }
            buf
        };
        let mut out = vec![T::zero(); self.len() * m];
        let mut extract = |buf: &[Complex<T>], a: usize, b: Option<usize>| {
            for i in 0..n0 {
                for j in 0..n1 {
                    for k in 0..n2 {
                        let x = (i * n1 + j) * n2 + k;
                        let d = (i * p[1] + j) * p[2] + k;
                        out[x * m + a] = buf[d].re * scale;
                        if let Some(b) = b {
                            out[x * m + b] = buf[d].im * scale;
                        }
                    }
                }
            }
        };
        let pairs: Vec<(usize, Option<usize>)> =
            (0..m).step_by(2).map(|a| (a, if a + 1 < m { Some(a + 1) } else { None })).collect();
        if self.isotropic {
            let k = &sp.spectra[0];
            for &(a, b) in &pairs {
                let mut buf = embed(a, b);
                transform(&mut buf, p, &sp.fwd);
                buf.par_iter_mut().zip(k.par_iter()).for_each(|(c, &s)| *c = *c * s);
                transform(&mut buf, p, &sp.inv);
                extract(&buf, a, b);
            }
            return out;
        }
        // component spectra from packed pairs
        let mirror = |d: usize| -> usize {
            let k = d % p[2];
            let j = (d / p[2]) % p[1];
            let i = d / (p[1] * p[2]);
            (((p[0] - i) % p[0]) * p[1] + (p[1] - j) % p[1]) * p[2] + (p[2] - k) % p[2]
        };
        let half = T::lit(0.5);
        let mut comp: Vec<Vec<Complex<T>>> = vec![Vec::new(); m];
        for &(a, b) in &pairs {
            let mut z = embed(a, b);
            transform(&mut z, p, &sp.fwd);
            match b {
                None => comp[a] = z,
                Some(b) => {
                    let (ua, ub): (Vec<_>, Vec<_>) = (0..total)
                        .into_par_iter()
                        .map(|d| {
                            let zc = z[mirror(d)].conj();
                            let s = z[d] + zc;
                            let t = z[d] - zc;
                            (s * half, Complex::new(t.im * half, -t.re * half))
                        })
                        .unzip();
                    comp[a] = ua;
                    comp[b] = ub;
                }
            }
        }
        for &(a, b) in &pairs {
            let mut w: Vec<Complex<T>> = (0..total)
                .into_par_iter()
                .map(|d| {
                    let mut oa = Complex::<T>::default();
                    let mut ob = Complex::<T>::default();
                    for c in 0..m {
                        oa = oa + comp[c][d] * sp.spectra[a * m + c][d];
                        if let Some(b) = b {
                            ob = ob + comp[c][d] * sp.spectra[b * m + c][d];
                        }
                    }
                    oa + Complex::new(-ob.im, ob.re)
                })
                .collect();
            transform(&mut w, p, &sp.inv);
            extract(&w, a, b);
        }
        out
    }

    /// `Σ_y K_ε(x−y)s(y)h³` for a scalar field `s`: one block (`1` or `m²` entries) per cell.
    pub fn apply_scalar(&self, s: &[T]) -> Vec<T> {
        let b = self.block();
        let [n0, n1, n2] = self.dims;
        let mut out = vec![T::zero(); self.len() * b];
        out.par_chunks_mut(b).enumerate().for_each(|(x, o)| {
            let i = (x / (n1 * n2)) as isize;
            let j = ((x / n2) % n1) as isize;
            let k = (x % n2) as isize;
            for (z, blk) in &self.offsets {
                let (a, bb, c) = (i - z[0], j - z[1], k - z[2]);
                if a < 0 || bb < 0 || c < 0 || a >= n0 as isize || bb >= n1 as isize || c >= n2 as isize {
                    continue;
                }
                let y = ((a as usize) * n1 + bb as usize) * n2 + c as usize;
                let w = s[y];
                if w != T::zero() {
                    for (oe, &ke) in o.iter_mut().zip(blk) {
                        *oe = *oe + ke * w;
                    }
                }
            }
        });
        out
    }

    /// Same as [`apply_scalar`](Self::apply_scalar) through the transform path.
    pub fn apply_scalar_fft(&self, s: &[T]) -> Vec<T> {
        let owned;
        let sp = match &self.spectral {
            Some(sp) => sp.as_ref(),
            None => {
                owned = self.build_spectral();
                &owned
            }
        };
        let p = sp.p;
        let total = p[0] * p[1] * p[2];
        let [n0, n1, n2] = self.dims;
        let b = self.block();
        let scale = T::one() / T::from_usize_lossy(total);
        let mut buf = vec![Complex::<T>::default(); total];
        for i in 0..n0 {
            for j in 0..n1 {
                for k in 0..n2 {
                    buf[(i * p[1] + j) * p[2] + k].re = s[(i * n1 + j) * n2 + k];
                }
            }
        }
        transform(&mut buf, p, &sp.fwd);
        let mut out = vec![T::zero(); self.len() * b];
        for e in 0..b {
            let mut w: Vec<Complex<T>> = buf.par_iter().zip(sp.spectra[e].par_iter()).map(|(&c, &k)| c * k).collect();
            transform(&mut w, p, &sp.inv);
            for i in 0..n0 {
                for j in 0..n1 {
                    for k in 0..n2 {
                        out[((i * n1 + j) * n2 + k) * b + e] = w[(i * p[1] + j) * p[2] + k].re * scale;
                    }
                }
            }
        }
        out
    }

    /// Scalar-mask convolution by the configured method.
    pub fn apply_scalar_auto(&self, s: &[T]) -> Vec<T> {
        match self.method {
            ConvMethod::Fft => self.apply_scalar_fft(s),
            _ => self.apply_scalar(s),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{sample_on_lattice, KernelSpec, RadialProfile, SampleConfig};
    use rand::Rng;

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut r = crate::rng::stream(seed, "test");
        (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_size(7), 8);
        assert_eq!(smooth_size(17), 18);
        assert_eq!(smooth_size(97), 100);
        assert_eq!(smooth_size(1), 1);
    }

    #[test]
    fn constant_field_in_margin() {
        let spec: KernelSpec<f64> = KernelSpec::scalar(RadialProfile::Gaussian { k: 1.0, a: 1.0 }, 2);
        let ker = sample_on_lattice(&spec, 0.1, 0.1, &SampleConfig { tail_tol: 1e-6, ..Default::default() }).unwrap();
        let n = 2 * ker.radius + 3;
        let c = Convolver::new(&ker, [n; 3], ConvMethod::Fft).unwrap();
        let u: Vec<f64> = (0..n * n * n).flat_map(|_| [0.3, -0.2]).collect();
        let out = c.apply(&u);
        let mid = ((n / 2) * n + n / 2) * n + n / 2;
        assert!((out[2 * mid] - ker.int_k[0] * 0.3).abs() < 1e-12);
        assert!((out[2 * mid + 1] + ker.int_k[0] * 0.2).abs() < 1e-12);
    }

    #[test]
    fn paths_agree_anisotropic() {
        let spec: KernelSpec<f64> = KernelSpec::nematic(
            RadialProfile::Gaussian { k: 1.0, a: 1.0 },
            RadialProfile::Gaussian { k: 0.3, a: 1.0 },
            RadialProfile::Gaussian { k: 0.1, a: 0.8 },
        );
        let ker = sample_on_lattice(&spec, 0.2, 0.1, &SampleConfig { tail_tol: 1e-4, ..Default::default() }).unwrap();
        let n = 9;
        let c = Convolver::new(&ker, [n; 3], ConvMethod::Fft).unwrap();
        let u = random(n * n * n * 5, 3);
        let a = c.apply_direct(&u);
        let b = c.apply_fft(&u);
        let scale = a.iter().fold(0.0f64, |s, x| s.max(x.abs()));
        let err = a.iter().zip(&b).fold(0.0f64, |s, (x, y)| s.max((x - y).abs()));
        assert!(err <= 1e-10 * scale, "{err} vs {scale}");
        let sa = c.apply_scalar(&random(n * n * n, 4));
        let sb = c.apply_scalar_fft(&random(n * n * n, 4));
        let err = sa.iter().zip(&sb).fold(0.0f64, |s, (x, y)| s.max((x - y).abs()));
        assert!(err < 1e-10);
    }
}
