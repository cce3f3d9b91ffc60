//! Qubit state and process tomography on simulated measurement records.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use nalgebra::{Matrix2, Matrix4, SMatrix, SVector, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::timebin_qubit::QubitState;

const TOL: f64 = 1e-9;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Pauli operators in the order I, X, Y, Z.
pub fn paulis() -> [Matrix2<Complex64>; 4] {
    let (o, l, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
    [
        Matrix2::new(l, o, o, l),
        Matrix2::new(o, l, l, o),
        Matrix2::new(o, -i, i, o),
        Matrix2::new(l, o, o, -l),
    ]
}

/// A physical qubit state in the `{|e⟩, |l⟩}` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Matrix2<Complex64>);

impl DensityMatrix {
    /// Checks Hermiticity, unit trace and positivity to 1e-9.
    pub fn new(m: Matrix2<Complex64>) -> Result<Self> {
        if (m - m.adjoint()).norm() > TOL {
            return Err(Error::domain("density matrix is not Hermitian"));
        }
        if (m.trace() - c(1.0, 0.0)).norm() > TOL {
            return Err(Error::domain(format!("density matrix has trace {}", m.trace())));
        }
        let min = SymmetricEigen::new(m).eigenvalues.min();
        if min < -TOL {
            return Err(Error::domain(format!(
                "density matrix has negative eigenvalue {min:.3e}"
            )));
        }
        Ok(Self(m))
    }

    pub fn pure(q: &QubitState) -> Self {
        let v = nalgebra::Vector2::new(q.early, q.late);
        Self(v * v.adjoint())
    }

    pub fn maximally_mixed() -> Self {
        Self(Matrix2::identity() * c(0.5, 0.0))
    }

    /// `(I + r·σ)/2`; vectors longer than one are scaled back onto the
    /// sphere, which is the nearest physical state in Frobenius norm.
    pub fn from_bloch(r: [f64; 3]) -> Self {
        let len = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        let s = if len > 1.0 { 1.0 / len } else { 1.0 };
        let p = paulis();
        let m = (p[0] + p[1] * c(s * r[0], 0.0) + p[2] * c(s * r[1], 0.0) + p[3] * c(s * r[2], 0.0))
            * c(0.5, 0.0);
        Self(m)
    }

    pub fn bloch(&self) -> [f64; 3] {
        let p = paulis();
        [1, 2, 3].map(|k| (self.0 * p[k]).trace().re)
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.0
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    /// Writes `row,col,re,im`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "row,col,re,im")?;
        for r in 0..2 {
            for col in 0..2 {
                let v = self.0[(r, col)];
                writeln!(out, "{r},{col},{:.12},{:.12}", v.re, v.im)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    Z,
    X,
    Y,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::Z, Basis::X, Basis::Y];

    fn index(self) -> usize {
        match self {
            Basis::X => 0,
            Basis::Y => 1,
            Basis::Z => 2,
        }
    }

    /// Probability of the `+` outcome.
    pub fn p_plus(self, rho: &DensityMatrix) -> f64 {
        ((1.0 + rho.bloch()[self.index()]) / 2.0).clamp(0.0, 1.0)
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::Z => "Z",
            Basis::X => "X",
            Basis::Y => "Y",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementRecord {
    pub basis: Basis,
    pub n_plus: u64,
    pub n_minus: u64,
    pub shots: u64,
}

impl MeasurementRecord {
    pub fn validate(&self) -> Result<()> {
        if self.n_plus + self.n_minus > self.shots {
            return Err(Error::domain("more outcomes than shots"));
        }
        Ok(())
    }

    /// Fraction of `+` among the registered outcomes.
    pub fn p_plus(&self) -> Result<f64> {
        let n = self.n_plus + self.n_minus;
        if n == 0 {
            return Err(Error::domain(format!("no outcomes recorded in basis {}", self.basis)));
        }
        Ok(self.n_plus as f64 / n as f64)
    }
}

/// Projective measurement with binomial shot noise.
pub fn simulate_measurement(
    rho: &DensityMatrix,
    basis: Basis,
    shots: u64,
    seed: u64,
) -> Result<MeasurementRecord> {
    DensityMatrix::new(rho.0)?;
    if shots == 0 {
        return Err(Error::config("need at least one shot"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = basis.p_plus(rho);
    let n_plus = Binomial::new(shots, p)
        .map_err(|e| Error::domain(e.to_string()))?
        .sample(&mut rng);
    Ok(MeasurementRecord {
        basis,
        n_plus,
        n_minus: shots - n_plus,
        shots,
    })
}

/// Linear inversion from the three Pauli expectation values, then
/// projection onto the physical states.
pub fn reconstruct_from_probabilities(p_plus: [(Basis, f64); 3]) -> Result<DensityMatrix> {
    let mut r = [f64::NAN; 3];
    for (basis, p) in p_plus {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("probability {p} outside [0, 1]")));
        }
        r[basis.index()] = 2.0 * p - 1.0;
    }
    if r.iter().any(|v| v.is_nan()) {
        return Err(Error::Missing("state tomography needs the Z, X and Y bases".into()));
    }
    Ok(DensityMatrix::from_bloch(r))
}

pub fn reconstruct_state(records: &[MeasurementRecord]) -> Result<DensityMatrix> {
    if records.is_empty() {
        return Err(Error::Missing("no measurement records".into()));
    }
    let mut probs = Vec::new();
    for basis in Basis::ALL {
        let rec = records
            .iter()
            .find(|r| r.basis == basis)
            .ok_or_else(|| Error::Missing(format!("no record in basis {basis}")))?;
        rec.validate()?;
        probs.push((basis, rec.p_plus()?));
    }
    reconstruct_from_probabilities([probs[0], probs[1], probs[2]])
}

/// `⟨ψ|ρ|ψ⟩`.
pub fn state_fidelity(rho: &DensityMatrix, target: &QubitState) -> f64 {
    let v = nalgebra::Vector2::new(target.early, target.late);
    (v.adjoint() * rho.0 * v)[(0, 0)].re.clamp(0.0, 1.0)
}

/// Qubit channel `ρ ↦ Σ χ_mn E_m ρ E_n†` in the Pauli basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessMatrix(Matrix4<Complex64>);

impl ProcessMatrix {
    /// Checks Hermiticity, trace preservation (1e-6) and positivity.
    pub fn new(chi: Matrix4<Complex64>) -> Result<Self> {
        Self::with_positivity_tolerance(chi, 1e-6)
    }

    /// As [`ProcessMatrix::new`] but allowing eigenvalues down to `-tol`,
    /// for estimates carrying shot noise.
    pub fn with_positivity_tolerance(chi: Matrix4<Complex64>, tol: f64) -> Result<Self> {
        if (chi - chi.adjoint()).norm() > 1e-6 {
            return Err(Error::domain("process matrix is not Hermitian"));
        }
        let p = paulis();
        let mut sum = Matrix2::zeros();
        for m in 0..4 {
            for n in 0..4 {
                sum += p[n].adjoint() * p[m] * chi[(m, n)];
            }
        }
        if (sum - Matrix2::identity()).norm() > 1e-6 {
            return Err(Error::domain("process matrix is not trace preserving"));
        }
        let min = SymmetricEigen::new(chi).eigenvalues.min();
        if min < -tol {
            return Err(Error::domain(format!(
                "process matrix has negative eigenvalue {min:.3e}"
            )));
        }
        Ok(Self(chi))
    }

    pub fn identity() -> Self {
        let mut m = Matrix4::zeros();
        m[(0, 0)] = c(1.0, 0.0);
        Self(m)
    }

    /// Pauli channel with the given probabilities for I, X, Y, Z.
    pub fn pauli(probabilities: [f64; 4]) -> Result<Self> {
        if probabilities.iter().any(|p| !(0.0..=1.0).contains(p))
            || (probabilities.iter().sum::<f64>() - 1.0).abs() > 1e-12
        {
            return Err(Error::domain("Pauli probabilities must be in [0,1] and sum to 1"));
        }
        Ok(Self(Matrix4::from_diagonal(&nalgebra::Vector4::from(
            probabilities.map(|p| c(p, 0.0)),
        ))))
    }

    /// `ρ ↦ (1 - p)ρ + p·I/2`.
    pub fn depolarizing(p: f64) -> Result<Self> {
        Self::pauli([1.0 - 3.0 * p / 4.0, p / 4.0, p / 4.0, p / 4.0])
    }

    /// Phase flip with probability `p`: coherences shrink by `1 - 2p`.
    pub fn dephasing(p: f64) -> Result<Self> {
        Self::pauli([1.0 - p, 0.0, 0.0, p])
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.0
    }

    pub fn entry(&self, m: usize, n: usize) -> Complex64 {
        self.0[(m, n)]
    }

    /// Largest magnitude of any entry other than `χ_II`.
    pub fn max_off_identity(&self) -> f64 {
        let mut best: f64 = 0.0;
        for m in 0..4 {
            for n in 0..4 {
                if (m, n) != (0, 0) {
                    best = best.max(self.0[(m, n)].norm());
                }
            }
        }
        best
    }

    /// Unnormalized image of `rho`.
    pub fn apply_raw(&self, rho: &Matrix2<Complex64>) -> Matrix2<Complex64> {
        let p = paulis();
        let mut out = Matrix2::zeros();
        for m in 0..4 {
            for n in 0..4 {
                let x = self.0[(m, n)];
                if x != c(0.0, 0.0) {
                    out += p[m] * rho * p[n].adjoint() * x;
                }
            }
        }
        out
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let out = self.apply_raw(&rho.0);
        let tr = out.trace().re;
        if !(tr > 0.0) {
            return Err(Error::domain("channel output has no weight"));
        }
        let out = out / c(tr, 0.0);
        DensityMatrix::new((out + out.adjoint()) * c(0.5, 0.0))
    }

    pub fn frobenius_distance(&self, other: &ProcessMatrix) -> f64 {
        (self.0 - other.0).norm()
    }

    /// Writes `row,col,re,im` with rows and columns labelled I, X, Y, Z.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        const L: [&str; 4] = ["I", "X", "Y", "Z"];
        writeln!(out, "row,col,re,im")?;
        for (r, row) in L.iter().enumerate() {
            for (col, name) in L.iter().enumerate() {
                let v = self.0[(r, col)];
                writeln!(out, "{row},{name},{:.12},{:.12}", v.re, v.im)?;
            }
        }
        Ok(())
    }
}

/// Linear operator on the qubit amplitudes followed by white noise:
/// `ρ ↦ (1 - p)·KρK†/Tr + p·I/2`. Loss in `K` is removed by
/// post-selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrausNoiseChannel {
    pub kraus: Matrix2<Complex64>,
    pub white_noise: f64,
}

impl KrausNoiseChannel {
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if !(0.0..=1.0).contains(&self.white_noise) {
            return Err(Error::domain("white-noise fraction must lie in [0, 1]"));
        }
        let out = self.kraus * rho.0 * self.kraus.adjoint();
        let tr = out.trace().re;
        if !(tr > 0.0) {
            return Err(Error::domain("channel transmits nothing for this input"));
        }
        let m = out / c(tr, 0.0) * c(1.0 - self.white_noise, 0.0)
            + Matrix2::identity() * c(self.white_noise / 2.0, 0.0);
        DensityMatrix::new((m + m.adjoint()) * c(0.5, 0.0))
    }

    /// Mean fraction of the input kept by `K` over the six polar states.
    pub fn transmission(&self) -> f64 {
        crate::timebin_qubit::QubitLabel::ALL
            .iter()
            .map(|&l| {
                let rho = DensityMatrix::pure(&QubitState::from_label(l));
                (self.kraus * rho.0 * self.kraus.adjoint()).trace().re
            })
            .sum::<f64>()
            / 6.0
    }
}

/// Input states used for process tomography.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputSet {
    /// `|Z+⟩, |Z−⟩, |X+⟩, |Y+⟩`.
    #[default]
    Four,
    /// All six polar states.
    Six,
}

/// How the output states are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimation {
    Exact,
    Sampled { shots: u64, seed: u64 },
}

fn outer_basis() -> [Matrix2<Complex64>; 4] {
    let mut out = [Matrix2::zeros(); 4];
    for (k, m) in out.iter_mut().enumerate() {
        m[(k / 2, k % 2)] = c(1.0, 0.0);
    }
    out
}

fn estimate_output<F>(channel: &F, label: crate::timebin_qubit::QubitLabel, how: Estimation, idx: u64) -> Result<DensityMatrix>
where
    F: Fn(&DensityMatrix) -> Result<DensityMatrix>,
{
    let out = channel(&DensityMatrix::pure(&QubitState::from_label(label)))?;
    let out = DensityMatrix::new(out.0)
        .map_err(|e| e.context(format!("channel output for {label}")))?;
    match how {
        Estimation::Exact => Ok(out),
        Estimation::Sampled { shots, seed } => {
            let records = Basis::ALL
                .iter()
                .enumerate()
                .map(|(b, &basis)| {
                    simulate_measurement(&out, basis, shots, seed ^ (idx * 3 + b as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
                })
                .collect::<Result<Vec<_>>>()?;
            reconstruct_state(&records)
        }
    }
}

/// Reconstructs χ of `channel` from the images of the input set.
pub fn process_tomography<F>(channel: F, inputs: InputSet, how: Estimation) -> Result<ProcessMatrix>
where
    F: Fn(&DensityMatrix) -> Result<DensityMatrix> + Sync,
{
    use crate::timebin_qubit::QubitLabel as L;
    let labels: &[L] = match inputs {
        InputSet::Four => &[L::ZPlus, L::ZMinus, L::XPlus, L::YPlus],
        InputSet::Six => &L::ALL,
    };
    let outs = labels
        .par_iter()
        .enumerate()
        .map(|(i, &l)| Ok((l, *estimate_output(&channel, l, how, i as u64)?.matrix())))
        .collect::<Result<Vec<_>>>()?;
    let get = |l: L| outs.iter().find(|(k, _)| *k == l).map(|(_, m)| *m).unwrap();
    let half = c(0.5, 0.0);
    let i = c(0.0, 1.0);
    let e00 = get(L::ZPlus);
    let e11 = get(L::ZMinus);
    let e01 = match inputs {
        InputSet::Four => get(L::XPlus) + get(L::YPlus) * i - (e00 + e11) * (c(1.0, 1.0) * half),
        InputSet::Six => {
            ((get(L::XPlus) - get(L::XMinus)) + (get(L::YPlus) - get(L::YMinus)) * i) * half
        }
    };
    let images = [e00, e01, e01.adjoint(), e11];
    let tol = match how {
        Estimation::Exact => 1e-6,
        Estimation::Sampled { shots, .. } => 10.0 / (shots as f64).sqrt(),
    };
    solve_chi(&images, tol)
}

/// Solves `ε(|a⟩⟨b|) = Σ χ_mn E_m |a⟩⟨b| E_n†` for χ.
fn solve_chi(images: &[Matrix2<Complex64>; 4], tol: f64) -> Result<ProcessMatrix> {
    let p = paulis();
    let basis = outer_basis();
    let mut a = SMatrix::<Complex64, 16, 16>::zeros();
    let mut b = SVector::<Complex64, 16>::zeros();
    for (j, rho) in basis.iter().enumerate() {
        for k in 0..4 {
            b[4 * j + k] = images[j][(k / 2, k % 2)];
        }
        for m in 0..4 {
            for n in 0..4 {
                let term = p[m] * rho * p[n].adjoint();
                for k in 0..4 {
                    a[(4 * j + k, 4 * m + n)] = term[(k / 2, k % 2)];
                }
            }
        }
    }
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::NoSolution("singular process tomography system".into()))?;
    let chi = Matrix4::from_fn(|m, n| x[4 * m + n]);
    let chi = (chi + chi.adjoint()) * c(0.5, 0.0);
    ProcessMatrix::with_positivity_tolerance(chi, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Plane {
    XY,
    XZ,
    YZ,
}

impl Plane {
    pub const ALL: [Plane; 3] = [Plane::XY, Plane::XZ, Plane::YZ];

    fn axes(self) -> (usize, usize) {
        match self {
            Plane::XY => (0, 1),
            Plane::XZ => (0, 2),
            Plane::YZ => (1, 2),
        }
    }
}

impl fmt::Display for Plane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Plane::XY => "XY",
            Plane::XZ => "XZ",
            Plane::YZ => "YZ",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionPoint {
    pub plane: Plane,
    pub angle: f64,
    pub input: (f64, f64),
    pub output: (f64, f64),
}

/// Images of the pure states on the three great circles, in the plane of
/// each circle.
pub fn bloch_deformation(chi: &ProcessMatrix, n_samples: usize) -> Result<Vec<SectionPoint>> {
    if n_samples == 0 {
        return Err(Error::config("need at least one sample per circle"));
    }
    let mut points = Vec::with_capacity(3 * n_samples);
    for plane in Plane::ALL {
        let (a, b) = plane.axes();
        for k in 0..n_samples {
            let angle = 2.0 * PI * k as f64 / n_samples as f64;
            let mut r = [0.0; 3];
            r[a] = angle.cos();
            r[b] = angle.sin();
            let out = chi.apply(&DensityMatrix::from_bloch(r))?.bloch();
            points.push(SectionPoint {
                plane,
                angle,
                input: (r[a], r[b]),
                output: (out[a], out[b]),
            });
        }
    }
    Ok(points)
}

/// Writes `plane,angle_rad,in_a,in_b,out_a,out_b`.
pub fn write_sections_csv<W: Write>(points: &[SectionPoint], mut out: W) -> Result<()> {
    writeln!(out, "plane,angle_rad,in_a,in_b,out_a,out_b")?;
    for p in points {
        writeln!(
            out,
            "{},{:.9},{:.12},{:.12},{:.12},{:.12}",
            p.plane, p.angle, p.input.0, p.input.1, p.output.0, p.output.1
        )?;
    }
    Ok(())
}

/// `|ψ⟩` on the Bloch sphere at polar angle `theta` and azimuth `phi`.
pub fn state_at(theta: f64, phi: f64) -> QubitState {
    QubitState {
        early: c((theta / 2.0).cos(), 0.0),
        late: Complex64::from_polar((theta / 2.0).sin(), phi),
    }
}
