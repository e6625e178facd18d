//! Uniform tensor grids on R^n, grid norms, and a discrete Fourier bridge
//! approximating the continuous transform.
//!
//! Spatial grids are midpoint grids: x = -L + (k + 1/2) h with even N, so
//! the origin is never a node (operator outputs such as the Hausdorff
//! average of an indicator have logarithmic singularities there). The
//! Fourier bridge returns values on the integer dual lattice xi = m/(2L),
//! m = -N/2 .. N/2-1, which does contain 0; the two node conventions are
//! distinguished by the `centered` flag.

use crate::error::{Error, Result};
use crate::field::FieldFn;
use ndarray::{ArrayD, Axis, Dimension, IxDyn};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    half_widths: Vec<f64>,
    points: Vec<usize>,
    centered: bool,
}

impl GridSpec {
    /// Midpoint spatial grid, the default for sampling functions on R^n.
    pub fn spatial(half_widths: &[f64], points: &[usize]) -> Result<Self> {
        Self::new(half_widths, points, true)
    }

    /// Square spatial grid: the same half-width and point count per axis.
    pub fn cubic(n: usize, half_width: f64, points: usize) -> Result<Self> {
        Self::spatial(&vec![half_width; n], &vec![points; n])
    }

    pub fn new(half_widths: &[f64], points: &[usize], centered: bool) -> Result<Self> {
        if half_widths.is_empty() || half_widths.len() != points.len() {
            return Err(Error::InvalidArgument(
                "grid axes must be non-empty and consistent".into(),
            ));
        }
        for &l in half_widths {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "half-width must be positive and finite, got {l}"
                )));
            }
        }
        for &n in points {
            if n < 2 || n % 2 != 0 {
                return Err(Error::InvalidArgument(format!(
                    "points per axis must be even and >= 2, got {n}"
                )));
            }
        }
        Ok(GridSpec {
            half_widths: half_widths.to_vec(),
            points: points.to_vec(),
            centered,
        })
    }

    pub fn dim(&self) -> usize {
        self.half_widths.len()
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * self.half_widths[axis] / self.points[axis] as f64
    }

    fn offset(&self) -> f64 {
        if self.centered {
            0.5
        } else {
            0.0
        }
    }

    pub fn node(&self, axis: usize, k: usize) -> f64 {
        -self.half_widths[axis] + (k as f64 + self.offset()) * self.spacing(axis)
    }

    pub fn axis_nodes(&self, axis: usize) -> Vec<f64> {
        (0..self.points[axis]).map(|k| self.node(axis, k)).collect()
    }

    /// Coordinates of the node with the given multi-index.
    pub fn coords(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .enumerate()
            .map(|(j, &k)| self.node(j, k))
            .collect()
    }

    pub fn total_points(&self) -> usize {
        self.points.iter().product()
    }

    /// Volume of one grid cell.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|j| self.spacing(j)).product()
    }

    /// The dual (frequency) grid: integer bins xi = m/(2L).
    pub fn dual(&self) -> GridSpec {
        GridSpec {
            half_widths: self
                .points
                .iter()
                .zip(&self.half_widths)
                .map(|(&n, &l)| n as f64 / (4.0 * l))
                .collect(),
            points: self.points.clone(),
            centered: false,
        }
    }

    pub fn approx_eq(&self, other: &GridSpec) -> bool {
        self.points == other.points
            && self.centered == other.centered
            && self
                .half_widths
                .iter()
                .zip(&other.half_widths)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * (a.abs() + b.abs()))
    }
}

#[derive(Debug, Clone)]
pub struct GridFunction {
    spec: GridSpec,
    samples: ArrayD<Complex64>,
}

impl GridFunction {
    pub fn new(spec: GridSpec, samples: ArrayD<Complex64>) -> Result<Self> {
        if samples.shape() != spec.points() {
            return Err(Error::DimensionMismatch {
                expected: spec.total_points(),
                actual: samples.len(),
            });
        }
        Ok(GridFunction { spec, samples })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        let shape = IxDyn(spec.points());
        GridFunction {
            samples: ArrayD::zeros(shape),
            spec,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn samples(&self) -> &ArrayD<Complex64> {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut ArrayD<Complex64> {
        &mut self.samples
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64 + Sync) -> GridFunction {
        GridFunction {
            spec: self.spec.clone(),
            samples: self.samples.map(|&z| f(z)),
        }
    }

    pub fn scale(&self, a: Complex64) -> GridFunction {
        self.map(|z| a * z)
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip(other, |a, b| a - b)
    }

    pub fn zip(
        &self,
        other: &GridFunction,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<GridFunction> {
        if !self.spec.approx_eq(&other.spec) {
            return Err(Error::InvalidArgument(
                "grid functions live on different grids".into(),
            ));
        }
        let mut out = self.samples.clone();
        out.zip_mut_with(&other.samples, |a, &b| *a = f(*a, b));
        Ok(GridFunction {
            spec: self.spec.clone(),
            samples: out,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }

    /// Riemann-sum L^p norm; `p = f64::INFINITY` gives the sup of |samples|.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if p.is_infinite() && p > 0.0 {
            return Ok(self.max_abs());
        }
        if !(p >= 1.0) || p.is_nan() {
            return Err(Error::InvalidArgument(format!(
                "L^p norm needs p in [1, inf], got {p}"
            )));
        }
        let vol = self.spec.cell_volume();
        let sum: f64 = if (p - 1.0).abs() < 1e-15 {
            self.samples.iter().map(|z| z.norm()).sum()
        } else if (p - 2.0).abs() < 1e-15 {
            self.samples.iter().map(|z| z.norm_sqr()).sum()
        } else {
            self.samples.iter().map(|z| z.norm().powf(p)).sum()
        };
        Ok((sum * vol).powf(1.0 / p))
    }

    /// Bilinear grid pairing  sum f(x) g(x) h^n  (no conjugation; the
    /// duality identities pair functions bilinearly).
    pub fn pairing(&self, other: &GridFunction) -> Result<Complex64> {
        if !self.spec.approx_eq(&other.spec) {
            return Err(Error::InvalidArgument(
                "grid functions live on different grids".into(),
            ));
        }
        let vol = self.spec.cell_volume();
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.samples.iter().zip(other.samples.iter()) {
            acc += a * b;
        }
        Ok(acc * vol)
    }

    /// Relative L^2 distance with a +1 regularizer in the denominator, so
    /// that zero-input cases stay well defined.
    pub fn rel_l2_distance(&self, reference: &GridFunction) -> Result<f64> {
        let diff = self.sub(reference)?;
        Ok(diff.lp_norm(2.0)? / (1.0 + reference.lp_norm(2.0)?))
    }

    /// Same, restricted to nodes whose coordinates satisfy `mask`.
    pub fn rel_l2_distance_masked(
        &self,
        reference: &GridFunction,
        mask: impl Fn(&[f64]) -> bool,
    ) -> Result<f64> {
        if !self.spec.approx_eq(&reference.spec) {
            return Err(Error::InvalidArgument(
                "grid functions live on different grids".into(),
            ));
        }
        let vol = self.spec.cell_volume();
        let mut num = 0.0;
        let mut den = 0.0;
        for (idx, a) in self.samples.indexed_iter() {
            let coords = self.spec.coords(idx.slice());
            if mask(&coords) {
                let b = reference.samples[&idx];
                num += (a - b).norm_sqr();
                den += b.norm_sqr();
            }
        }
        Ok((num * vol).sqrt() / (1.0 + (den * vol).sqrt()))
    }

    /// Multilinear interpolation with zero extension outside the box.
    pub fn interpolate(&self, x: &[f64]) -> Complex64 {
        let n = self.spec.dim();
        debug_assert_eq!(x.len(), n);
        let mut base = Vec::with_capacity(n);
        let mut frac = Vec::with_capacity(n);
        for j in 0..n {
            let p = (x[j] + self.spec.half_widths[j]) / self.spec.spacing(j) - self.spec.offset();
            let i0 = p.floor();
            base.push(i0 as i64);
            frac.push(p - i0);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        let corners = 1usize << n;
        let mut idx = vec![0usize; n];
        'corner: for c in 0..corners {
            let mut w = 1.0;
            for j in 0..n {
                let hi = (c >> j) & 1 == 1;
                let i = base[j] + if hi { 1 } else { 0 };
                if i < 0 || i >= self.spec.points[j] as i64 {
                    continue 'corner; // zero extension
                }
                idx[j] = i as usize;
                w *= if hi { frac[j] } else { 1.0 - frac[j] };
            }
            acc += self.samples[IxDyn(&idx)] * w;
        }
        acc
    }

    /// Piecewise-constant dilation g(x/m) realized on the m-times wider
    /// grid with m*N points per axis; every sample is replicated m^n
    /// times, so L^1 norms scale by exactly m^n in grid arithmetic.
    pub fn dilate_replicate(&self, m: usize) -> Result<GridFunction> {
        if m == 0 {
            return Err(Error::InvalidArgument("dilation factor must be >= 1".into()));
        }
        if m == 1 {
            return Ok(self.clone());
        }
        let spec = GridSpec::new(
            &self
                .spec
                .half_widths
                .iter()
                .map(|&l| l * m as f64)
                .collect::<Vec<_>>(),
            &self
                .spec
                .points
                .iter()
                .map(|&n| n * m)
                .collect::<Vec<_>>(),
            self.spec.centered,
        )?;
        let shape = IxDyn(spec.points());
        let samples = ArrayD::from_shape_fn(shape, |idx| {
            let src: Vec<usize> = (0..self.spec.dim())
                .map(|j| (2 * idx[j] + 1) / (2 * m))
                .collect();
            self.samples[IxDyn(&src)]
        });
        GridFunction::new(spec, samples)
    }

    /// Forward Fourier transform, convention ĝ(ξ) = ∫ g(x) e^{-2πi x·ξ} dx,
    /// returned on the integer dual lattice.
    pub fn fourier(&self) -> GridFunction {
        let mut samples = self.samples.clone();
        let off = self.spec.offset();
        for axis in 0..self.spec.dim() {
            let n = self.spec.points[axis];
            let h = self.spec.spacing(axis);
            forward_axis(&mut samples, axis, n, h, off);
        }
        GridFunction {
            spec: self.spec.dual(),
            samples,
        }
    }

    /// Inverse of [`GridFunction::fourier`]; input must live on an integer
    /// dual lattice and the output is the midpoint spatial grid.
    pub fn inverse_fourier(&self) -> Result<GridFunction> {
        if self.spec.centered {
            return Err(Error::InvalidArgument(
                "inverse transform expects a dual (non-centered) grid".into(),
            ));
        }
        let out_spec = self.spec.dual(); // involution of the geometry
        let out_spec = GridSpec {
            centered: true,
            ..out_spec
        };
        let mut samples = self.samples.clone();
        for axis in 0..out_spec.dim() {
            let n = out_spec.points[axis];
            let h = out_spec.spacing(axis);
            inverse_axis(&mut samples, axis, n, h, 0.5);
        }
        Ok(GridFunction {
            spec: out_spec,
            samples,
        })
    }

    /// Applies a Fourier multiplier along one axis: FFT, multiply by
    /// `mult(xi)` at the axis's continuous frequencies, inverse FFT. The
    /// offset phases cancel between the two transforms, so this is exact
    /// for any node convention.
    pub fn apply_axis_multiplier(
        &self,
        axis: usize,
        mult: impl Fn(f64) -> Complex64,
    ) -> GridFunction {
        let n = self.spec.points[axis];
        let l = self.spec.half_widths[axis];
        let mults: Vec<Complex64> = (0..n)
            .map(|b| {
                let m = if b < n / 2 { b as i64 } else { b as i64 - n as i64 };
                mult(m as f64 / (2.0 * l))
            })
            .collect();
        let mut samples = self.samples.clone();
        multiplier_axis(&mut samples, axis, &mults);
        GridFunction {
            spec: self.spec.clone(),
            samples,
        }
    }

    /// Binary cache layout: header n, N_1..N_n (u64 LE), L_1..L_n (f64 LE),
    /// then interleaved re/im f64 LE in row-major order. Only spatial
    /// (midpoint) grids are serialized.
    pub fn save(&self, path: &Path) -> Result<()> {
        if !self.spec.centered {
            return Err(Error::InvalidArgument(
                "only spatial (midpoint) grid functions are cached".into(),
            ));
        }
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        w.write_all(&(self.spec.dim() as u64).to_le_bytes())?;
        for &n in self.spec.points() {
            w.write_all(&(n as u64).to_le_bytes())?;
        }
        for &l in self.spec.half_widths() {
            w.write_all(&l.to_le_bytes())?;
        }
        for z in self.samples.iter() {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<GridFunction> {
        let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut u = [0u8; 8];
        r.read_exact(&mut u)?;
        let n = u64::from_le_bytes(u) as usize;
        if n == 0 || n > 8 {
            return Err(Error::InvalidArgument(format!(
                "implausible dimension {n} in cache header"
            )));
        }
        let mut points = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut u)?;
            points.push(u64::from_le_bytes(u) as usize);
        }
        let mut half_widths = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut u)?;
            half_widths.push(f64::from_le_bytes(u));
        }
        let spec = GridSpec::new(&half_widths, &points, true)?;
        let total = spec.total_points();
        let mut flat = Vec::with_capacity(total);
        for _ in 0..total {
            r.read_exact(&mut u)?;
            let re = f64::from_le_bytes(u);
            r.read_exact(&mut u)?;
            let im = f64::from_le_bytes(u);
            flat.push(Complex64::new(re, im));
        }
        let samples = ArrayD::from_shape_vec(IxDyn(spec.points()), flat)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        GridFunction::new(spec, samples)
    }
}

/// Evaluates `f` at every node of `spec`; errors on the first non-finite
/// value, naming the offending node.
pub fn sample(f: &FieldFn, spec: &GridSpec) -> Result<GridFunction> {
    if f.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            actual: f.dim(),
        });
    }
    let n = spec.dim();
    if n > 8 {
        return Err(Error::InvalidArgument(
            "grids beyond 8 axes are not supported".into(),
        ));
    }
    let shape: Vec<usize> = spec.points().to_vec();
    let strides: Vec<usize> = {
        let mut s = vec![1usize; n];
        for j in (0..n.saturating_sub(1)).rev() {
            s[j] = s[j + 1] * shape[j + 1];
        }
        s
    };
    let total = spec.total_points();
    let flat: Vec<Complex64> = (0..total)
        .into_par_iter()
        .map(|flat_idx| {
            let mut coords = [0.0f64; 8];
            let mut rem = flat_idx;
            for j in 0..n {
                let k = rem / strides[j];
                rem %= strides[j];
                coords[j] = spec.node(j, k);
            }
            f.eval(&coords[..n])
        })
        .collect();
    if let Some(bad) = flat.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        let mut rem = bad;
        let mut node = Vec::with_capacity(n);
        for j in 0..n {
            let k = rem / strides[j];
            rem %= strides[j];
            node.push(spec.node(j, k));
        }
        return Err(Error::NonFiniteSample {
            value: format!("{}", flat[bad]),
            node,
        });
    }
    let samples = ArrayD::from_shape_vec(IxDyn(&shape), flat)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    GridFunction::new(spec.clone(), samples)
}

/// Tensor product of one-dimensional grid functions; grid norms of the
/// result factor exactly in grid arithmetic.
pub fn tensor_product(parts: &[&GridFunction]) -> Result<GridFunction> {
    if parts.is_empty() {
        return Err(Error::InvalidArgument("tensor product of nothing".into()));
    }
    for p in parts {
        if p.spec.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                actual: p.spec.dim(),
            });
        }
        if p.spec.centered != parts[0].spec.centered {
            return Err(Error::InvalidArgument(
                "tensor factors use different node conventions".into(),
            ));
        }
    }
    let half_widths: Vec<f64> = parts.iter().map(|p| p.spec.half_widths[0]).collect();
    let points: Vec<usize> = parts.iter().map(|p| p.spec.points[0]).collect();
    let spec = GridSpec::new(&half_widths, &points, parts[0].spec.centered)?;
    let factors: Vec<Vec<Complex64>> = parts
        .iter()
        .map(|p| p.samples.iter().cloned().collect())
        .collect();
    let samples = ArrayD::from_shape_fn(IxDyn(&points), |idx| {
        let mut acc = Complex64::new(1.0, 0.0);
        for (j, f) in factors.iter().enumerate() {
            acc *= f[idx[j]];
        }
        acc
    });
    GridFunction::new(spec, samples)
}

fn for_each_lane(
    samples: &mut ArrayD<Complex64>,
    axis: usize,
    n: usize,
    mut f: impl FnMut(&mut [Complex64]),
) {
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for mut lane in samples.lanes_mut(Axis(axis)) {
        for (b, v) in buf.iter_mut().zip(lane.iter()) {
            *b = *v;
        }
        f(&mut buf);
        for (v, b) in lane.iter_mut().zip(buf.iter()) {
            *v = *b;
        }
    }
}

/// In-place forward transform along one axis with the phase factors that
/// map midpoint samples to values of the continuous transform at the
/// integer dual bins (ascending frequency order).
fn forward_axis(samples: &mut ArrayD<Complex64>, axis: usize, n: usize, h: f64, off: f64) {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let phases: Vec<Complex64> = (0..n)
        .map(|k_out| {
            let m = k_out as i64 - (n / 2) as i64;
            Complex64::from_polar(h, PI * m as f64 * (1.0 - 2.0 * off / n as f64))
        })
        .collect();
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for_each_lane(samples, axis, n, |buf| {
        fft.process_with_scratch(buf, &mut scratch);
        for (k_out, o) in out.iter_mut().enumerate() {
            let b = (k_out + n / 2) % n;
            *o = phases[k_out] * buf[b];
        }
        buf.copy_from_slice(&out);
    });
}

/// Inverse of `forward_axis`, producing samples at offset `off` nodes.
fn inverse_axis(samples: &mut ArrayD<Complex64>, axis: usize, n: usize, h: f64, off: f64) {
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(n);
    let phases: Vec<Complex64> = (0..n)
        .map(|k_in| {
            let m = k_in as i64 - (n / 2) as i64;
            Complex64::from_polar(
                1.0 / (h * n as f64),
                -PI * m as f64 * (1.0 - 2.0 * off / n as f64),
            )
        })
        .collect();
    let mut scratch = vec![Complex64::new(0.0, 0.0); ifft.get_inplace_scratch_len()];
    let mut tmp = vec![Complex64::new(0.0, 0.0); n];
    for_each_lane(samples, axis, n, |buf| {
        // De-phase and undo the fftshift back to DFT bin order.
        for k_in in 0..n {
            let b = (k_in + n / 2) % n;
            tmp[b] = phases[k_in] * buf[k_in];
        }
        buf.copy_from_slice(&tmp);
        ifft.process_with_scratch(buf, &mut scratch);
    });
}

fn multiplier_axis(samples: &mut ArrayD<Complex64>, axis: usize, mults: &[Complex64]) {
    let n = mults.len();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);
    let mut scratch =
        vec![
            Complex64::new(0.0, 0.0);
            fft.get_inplace_scratch_len().max(ifft.get_inplace_scratch_len())
        ];
    let inv_n = 1.0 / n as f64;
    for_each_lane(samples, axis, n, |buf| {
        fft.process_with_scratch(buf, &mut scratch);
        for (b, v) in buf.iter_mut().enumerate() {
            *v *= mults[b];
        }
        ifft.process_with_scratch(buf, &mut scratch);
        for v in buf.iter_mut() {
            *v *= inv_n;
        }
    });
}

/// Samples a 1-d closure over the given spec; convenience for tests and
/// battery construction.
pub fn sample_scalar(
    f: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
    spec: &GridSpec,
) -> Result<GridFunction> {
    sample(&FieldFn::scalar(f), spec)
}

/// Shared handle type for 1-d profiles used when assembling tensor fields.
pub fn point1(f: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Arc<dyn Fn(f64) -> Complex64 + Send + Sync> {
    Arc::new(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn gaussian_grid(l: f64, n: usize) -> GridFunction {
        let spec = GridSpec::cubic(1, l, n).unwrap();
        sample_scalar(|x| Complex64::new((-PI * x * x).exp(), 0.0), &spec).unwrap()
    }

    #[test]
    fn origin_is_not_a_node() {
        let spec = GridSpec::cubic(1, 8.0, 16).unwrap();
        for k in 0..16 {
            assert!(spec.node(0, k).abs() > 1e-12);
        }
        // but the dual grid does contain zero
        let dual = spec.dual();
        assert!((0..16).any(|k| dual.node(0, k).abs() < 1e-15));
    }

    #[test]
    fn sampling_is_exact_and_odd_functions_negate() {
        let spec = GridSpec::cubic(1, 64.0, 4096).unwrap();
        let g = sample_scalar(|x| Complex64::new(1.0 / (1.0 + x * x), 0.0), &spec).unwrap();
        for k in [0usize, 17, 2048, 4095] {
            let x = spec.node(0, k);
            assert_abs_diff_eq!(
                g.samples()[IxDyn(&[k])].re,
                1.0 / (1.0 + x * x),
                epsilon = 1e-15
            );
        }
        let odd = sample_scalar(
            |x| Complex64::new(x / (1.0 + x * x).powi(2), 0.0),
            &spec,
        )
        .unwrap();
        // midpoint grids are symmetric: node(k) = -node(N-1-k)
        for k in [0usize, 100, 1000] {
            let a = odd.samples()[IxDyn(&[k])].re;
            let b = odd.samples()[IxDyn(&[4095 - k])].re;
            assert_abs_diff_eq!(a, -b, epsilon = 1e-15);
        }
    }

    #[test]
    fn sampling_rejects_non_finite() {
        let spec = GridSpec::cubic(1, 4.0, 8).unwrap();
        let pole = spec.node(0, 3);
        let err = sample_scalar(move |x| Complex64::new(1.0 / (x - pole), 0.0), &spec);
        assert!(matches!(err, Err(Error::NonFiniteSample { .. })));
    }

    #[test]
    fn l1_norms_of_classic_profiles() {
        let spec = GridSpec::cubic(1, 512.0, 1 << 16).unwrap();
        let g = sample_scalar(|x| Complex64::new(1.0 / (1.0 + x * x), 0.0), &spec).unwrap();
        assert_abs_diff_eq!(g.lp_norm(1.0).unwrap(), PI, epsilon = 5e-3);
        let w = sample_scalar(
            |x| Complex64::new(x / (1.0 + x * x).powi(2), 0.0),
            &spec,
        )
        .unwrap();
        assert_abs_diff_eq!(w.lp_norm(1.0).unwrap(), 1.0, epsilon = 5e-3);
        assert_eq!(GridFunction::zeros(spec).lp_norm(3.0).unwrap(), 0.0);
    }

    #[test]
    fn lp_norm_rejects_small_p() {
        let g = gaussian_grid(8.0, 64);
        assert!(g.lp_norm(0.5).is_err());
    }

    #[test]
    fn tensor_norms_factor_exactly() {
        let spec = GridSpec::cubic(1, 16.0, 128).unwrap();
        let f = sample_scalar(|x| Complex64::new((-PI * x * x).exp(), 0.0), &spec).unwrap();
        let g = sample_scalar(|x| Complex64::new(1.0 / (1.0 + x * x), 0.0), &spec).unwrap();
        let t = tensor_product(&[&f, &g]).unwrap();
        for p in [1.0, 2.0, 3.5] {
            let lhs = t.lp_norm(p).unwrap();
            let rhs = f.lp_norm(p).unwrap() * g.lp_norm(p).unwrap();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12 * (1.0 + rhs));
        }
        let z = GridFunction::zeros(spec.clone());
        let tz = tensor_product(&[&z, &g]).unwrap();
        assert_eq!(tz.lp_norm(1.0).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_is_fourier_self_dual() {
        let g = gaussian_grid(16.0, 1024);
        let ghat = g.fourier();
        // compare against the closed form on the dual grid
        let dual = g.spec().dual();
        let expect = sample_scalar(|xi| Complex64::new((-PI * xi * xi).exp(), 0.0), &dual).unwrap();
        let err = ghat.rel_l2_distance(&expect).unwrap();
        assert!(err < 1e-8, "relative error {err}");
    }

    #[test]
    fn poisson_transform_pair_within_truncation_floor() {
        let l = 512.0;
        let n = 1 << 14;
        let spec = GridSpec::cubic(1, l, n).unwrap();
        let g = sample_scalar(|x| Complex64::new(1.0 / (PI * (1.0 + x * x)), 0.0), &spec).unwrap();
        let ghat = g.fourier();
        let dual = spec.dual();
        // |xi| <= N/(8L) band
        let band = n as f64 / (8.0 * l);
        let mut worst = 0.0f64;
        for k in 0..n {
            let xi = dual.node(0, k);
            if xi.abs() <= band {
                let expect = (-2.0 * PI * xi.abs()).exp();
                worst = worst.max((ghat.samples()[IxDyn(&[k])].re - expect).abs());
            }
        }
        // Spatial truncation of the heavy Cauchy tail bounds the achievable
        // accuracy at 2/(pi L); everything past that floor must be clean.
        let floor = 2.0 / (PI * l);
        assert!(worst <= 1e-6 + 1.5 * floor, "worst {worst}, floor {floor}");
    }

    #[test]
    fn fourier_round_trip_and_parseval() {
        let g = gaussian_grid(12.0, 512);
        let back = g.fourier().inverse_fourier().unwrap();
        assert!(g.spec().approx_eq(back.spec()));
        let err = back.rel_l2_distance(&g).unwrap();
        assert!(err < 1e-12, "round trip error {err}");

        let l2 = g.lp_norm(2.0).unwrap();
        let l2_hat = g.fourier().lp_norm(2.0).unwrap();
        assert!((l2 - l2_hat).abs() <= 1e-9 * l2);
    }

    #[test]
    fn norm_refinement_settles() {
        let mut prev_norm = None;
        let mut prev_change = f64::INFINITY;
        for n in [1024usize, 2048, 4096] {
            let spec = GridSpec::cubic(1, 64.0, n).unwrap();
            let g =
                sample_scalar(|x| Complex64::new(1.0 / (1.0 + x * x), 0.0), &spec).unwrap();
            let v = g.lp_norm(1.0).unwrap();
            if let Some(p) = prev_norm {
                let change = (v - p as f64).abs();
                assert!(change <= prev_change + 1e-12);
                prev_change = change;
            }
            prev_norm = Some(v);
        }
    }

    #[test]
    fn dilate_replicate_scales_l1_exactly() {
        let g = gaussian_grid(8.0, 64);
        let d = g.dilate_replicate(2).unwrap();
        let r = d.lp_norm(1.0).unwrap() / g.lp_norm(1.0).unwrap();
        assert_abs_diff_eq!(r, 2.0, epsilon = 1e-13);

        let spec = GridSpec::cubic(2, 4.0, 16).unwrap();
        let f2 = sample(
            &FieldFn::general(2, |x| {
                Complex64::new((-PI * (x[0] * x[0] + x[1] * x[1])).exp(), 0.0)
            }),
            &spec,
        )
        .unwrap();
        let d2 = f2.dilate_replicate(2).unwrap();
        let r2 = d2.lp_norm(1.0).unwrap() / f2.lp_norm(1.0).unwrap();
        assert_abs_diff_eq!(r2, 4.0, epsilon = 1e-13);
    }

    #[test]
    fn cache_round_trip() {
        let g = gaussian_grid(8.0, 64);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.bin");
        g.save(&path).unwrap();
        let back = GridFunction::load(&path).unwrap();
        assert!(g.spec().approx_eq(back.spec()));
        let err = back.rel_l2_distance(&g).unwrap();
        assert_eq!(err, 0.0);
    }

    #[test]
    fn interpolation_matches_smooth_function() {
        let spec = GridSpec::cubic(1, 8.0, 1024).unwrap();
        let g = sample_scalar(|x| Complex64::new((-x * x / 4.0).exp(), 0.0), &spec).unwrap();
        let f = FieldFn::interpolant(&g);
        for &x in &[0.123, -3.456, 5.0] {
            let exact = (-x * x / 4.0f64).exp();
            assert!((f.eval(&[x]).re - exact).abs() < 1e-4);
        }
        // zero extension
        assert_eq!(f.eval(&[100.0]), Complex64::new(0.0, 0.0));
    }
}
