//! Dense complex linear algebra over small, labeled Hilbert spaces.
//!
//! Every vector and operator carries its [`Space`], an ordered list of basis
//! labels, and every binary operation checks that the spaces agree. Dimensions
//! in this crate stay at or below 16, so storage is dense and row-major.

use std::fmt;
use std::sync::Arc;

use crate::{Error, Result};

pub use num_complex::Complex64 as Complex;

/// Tolerance for normalization checks on freshly constructed states.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Tolerance for checks made after arithmetic (unitarity, idempotence, norm drift).
pub const ARITHMETIC_TOL: f64 = 1e-10;
/// Residual squared norm below which nothing is left of an offer wave.
pub const RESIDUAL_FLOOR: f64 = 1e-12;

const ZERO: Complex = Complex::new(0.0, 0.0);
const ONE: Complex = Complex::new(1.0, 0.0);

/// Ordered, unique basis labels of a finite-dimensional space.
#[derive(Clone)]
pub struct Space {
    labels: Arc<[String]>,
}

impl Space {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::EmptySpace);
        }
        for (i, label) in labels.iter().enumerate() {
            if labels[..i].contains(label) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        Ok(Space {
            labels: labels.into(),
        })
    }

    /// The two-level space `{"0", "1"}`.
    pub fn qubit() -> Self {
        Space::new(["0", "1"]).expect("static labels are unique")
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Product space with labels `a ++ b` in row-major order.
    pub fn tensor(&self, other: &Space) -> Result<Space> {
        Space::new(
            self.labels
                .iter()
                .flat_map(|a| other.labels.iter().map(move |b| format!("{a}{b}"))),
        )
    }

    fn check_same(&self, other: &Space) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::SpaceMismatch {
                left: self.labels.to_vec(),
                right: other.labels.to_vec(),
            })
        }
    }
}

impl PartialEq for Space {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.labels, &other.labels) || self.labels == other.labels
    }
}

impl Eq for Space {}

impl fmt::Debug for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.labels.iter()).finish()
    }
}

fn check_finite(values: &[Complex]) -> Result<()> {
    match values.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

/// A vector of complex amplitudes over a labeled basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    space: Space,
    amplitudes: Vec<Complex>,
}

impl StateVector {
    /// Builds a vector without any normalization requirement.
    pub fn new(space: Space, amplitudes: Vec<Complex>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: amplitudes.len(),
            });
        }
        check_finite(&amplitudes)?;
        Ok(StateVector { space, amplitudes })
    }

    /// Builds a vector that must already be normalized within [`NORMALIZATION_TOL`].
    pub fn normalized(space: Space, amplitudes: Vec<Complex>) -> Result<Self> {
        let v = StateVector::new(space, amplitudes)?;
        v.require_normalized(NORMALIZATION_TOL)?;
        Ok(v)
    }

    /// Builds a vector and rescales it to unit norm.
    pub fn normalize_from(space: Space, amplitudes: Vec<Complex>) -> Result<Self> {
        let v = StateVector::new(space, amplitudes)?;
        let norm = v.norm();
        if norm < RESIDUAL_FLOOR {
            return Err(Error::NotNormalized {
                norm_sqr: v.norm_sqr(),
            });
        }
        Ok(v.scaled(Complex::new(1.0 / norm, 0.0)))
    }

    pub fn basis(space: Space, label: &str) -> Result<Self> {
        let idx = space
            .index_of(label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
        let mut amplitudes = vec![ZERO; space.dim()];
        amplitudes[idx] = ONE;
        Ok(StateVector { space, amplitudes })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex] {
        &self.amplitudes
    }

    pub fn amplitude(&self, label: &str) -> Option<Complex> {
        self.space.index_of(label).map(|i| self.amplitudes[i])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    pub fn require_normalized(&self, tol: f64) -> Result<()> {
        if self.is_normalized(tol) {
            Ok(())
        } else {
            Err(Error::NotNormalized {
                norm_sqr: self.norm_sqr(),
            })
        }
    }

    pub fn scaled(&self, factor: Complex) -> StateVector {
        StateVector {
            space: self.space.clone(),
            amplitudes: self.amplitudes.iter().map(|z| z * factor).collect(),
        }
    }

    /// Largest elementwise amplitude difference, or `None` if spaces differ.
    pub fn max_abs_diff(&self, other: &StateVector) -> Option<f64> {
        if self.space != other.space {
            return None;
        }
        Some(
            self.amplitudes
                .iter()
                .zip(&other.amplitudes)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    General,
    Projector,
    Unitary,
}

/// A dense square operator on a labeled space, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: Space,
    entries: Vec<Complex>,
    kind: OperatorKind,
}

impl Operator {
    pub fn new(space: Space, entries: Vec<Complex>) -> Result<Self> {
        let d = space.dim();
        if entries.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: entries.len(),
            });
        }
        check_finite(&entries)?;
        Ok(Operator {
            space,
            entries,
            kind: OperatorKind::General,
        })
    }

    /// Builds an operator and checks `P² = P` and `P = P†` within [`ARITHMETIC_TOL`].
    pub fn projector(space: Space, entries: Vec<Complex>) -> Result<Self> {
        Operator::new(space, entries)?.into_projector()
    }

    /// Builds an operator and checks `U†U = I` within [`ARITHMETIC_TOL`].
    pub fn unitary(space: Space, entries: Vec<Complex>) -> Result<Self> {
        Operator::new(space, entries)?.into_unitary()
    }

    pub fn into_projector(mut self) -> Result<Self> {
        let square = self.compose(&self)?;
        let adjoint = self.adjoint();
        let deviation = self.max_abs_diff(&square).max(self.max_abs_diff(&adjoint));
        if deviation > ARITHMETIC_TOL {
            return Err(Error::NotProjector { deviation });
        }
        self.kind = OperatorKind::Projector;
        Ok(self)
    }

    pub fn into_unitary(mut self) -> Result<Self> {
        let product = self.adjoint().compose(&self)?;
        let deviation = product.max_abs_diff(&Operator::identity(self.space.clone()));
        if deviation > ARITHMETIC_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        self.kind = OperatorKind::Unitary;
        Ok(self)
    }

    /// The identity is both unitary and a projector; it is flagged unitary.
    pub fn identity(space: Space) -> Self {
        let d = space.dim();
        let mut entries = vec![ZERO; d * d];
        for i in 0..d {
            entries[i * d + i] = ONE;
        }
        Operator {
            space,
            entries,
            kind: OperatorKind::Unitary,
        }
    }

    /// `|v⟩⟨v|` for a normalized `v`.
    pub fn rank_one(v: &StateVector) -> Result<Self> {
        v.require_normalized(ARITHMETIC_TOL)?;
        let a = v.amplitudes();
        let entries = a
            .iter()
            .flat_map(|r| a.iter().map(move |c| r * c.conj()))
            .collect();
        Operator::projector(v.space().clone(), entries)
    }

    /// Projector onto the span of the named basis states.
    pub fn basis_projector(space: Space, labels: &[&str]) -> Result<Self> {
        let d = space.dim();
        let mut entries = vec![ZERO; d * d];
        for label in labels {
            let i = space
                .index_of(label)
                .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
            entries[i * d + i] = ONE;
        }
        Operator::projector(space, entries)
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn is_projector(&self) -> bool {
        self.kind == OperatorKind::Projector
    }

    pub fn is_unitary(&self) -> bool {
        self.kind == OperatorKind::Unitary
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex {
        self.entries[row * self.dim() + col]
    }

    pub fn entries(&self) -> &[Complex] {
        &self.entries
    }

    pub fn adjoint(&self) -> Operator {
        let d = self.dim();
        let mut entries = vec![ZERO; d * d];
        for r in 0..d {
            for c in 0..d {
                entries[c * d + r] = self.entries[r * d + c].conj();
            }
        }
        Operator {
            space: self.space.clone(),
            entries,
            kind: self.kind,
        }
    }

    /// Matrix product `self · rhs`. Products of unitaries stay flagged unitary.
    pub fn compose(&self, rhs: &Operator) -> Result<Operator> {
        self.space.check_same(&rhs.space)?;
        let d = self.dim();
        let mut entries = vec![ZERO; d * d];
        for r in 0..d {
            for k in 0..d {
                let a = self.entries[r * d + k];
                if a == ZERO {
                    continue;
                }
                for c in 0..d {
                    entries[r * d + c] += a * rhs.entries[k * d + c];
                }
            }
        }
        let kind = if self.is_unitary() && rhs.is_unitary() {
            OperatorKind::Unitary
        } else {
            OperatorKind::General
        };
        Ok(Operator {
            space: self.space.clone(),
            entries,
            kind,
        })
    }

    /// Kronecker product; the kind survives when both factors share it.
    pub fn tensor(&self, rhs: &Operator) -> Result<Operator> {
        let space = self.space.tensor(&rhs.space)?;
        let (da, db) = (self.dim(), rhs.dim());
        let d = da * db;
        let mut entries = vec![ZERO; d * d];
        for ar in 0..da {
            for ac in 0..da {
                let a = self.entries[ar * da + ac];
                for br in 0..db {
                    for bc in 0..db {
                        entries[(ar * db + br) * d + (ac * db + bc)] = a * rhs.entries[br * db + bc];
                    }
                }
            }
        }
        let kind = if self.kind == rhs.kind {
            self.kind
        } else {
            OperatorKind::General
        };
        Ok(Operator {
            space,
            entries,
            kind,
        })
    }

    fn max_abs_diff(&self, other: &Operator) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `⟨a|b⟩ = Σ conj(aₖ)·bₖ`.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Complex> {
    a.space.check_same(&b.space)?;
    Ok(a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// `a ⊗ b` with labels concatenated pairwise in row-major order.
pub fn tensor(a: &StateVector, b: &StateVector) -> Result<StateVector> {
    let space = a.space.tensor(&b.space)?;
    let amplitudes = a
        .amplitudes
        .iter()
        .flat_map(|x| b.amplitudes.iter().map(move |y| x * y))
        .collect();
    Ok(StateVector { space, amplitudes })
}

pub fn apply(op: &Operator, v: &StateVector) -> Result<StateVector> {
    op.space.check_same(&v.space)?;
    let d = v.dim();
    let amplitudes = (0..d)
        .map(|r| {
            op.entries[r * d..(r + 1) * d]
                .iter()
                .zip(&v.amplitudes)
                .map(|(m, x)| m * x)
                .sum()
        })
        .collect();
    Ok(StateVector {
        space: v.space.clone(),
        amplitudes,
    })
}

fn expectation(p: &Operator, v: &StateVector) -> Complex {
    let d = v.dim();
    let mut acc = ZERO;
    for r in 0..d {
        let vr = v.amplitudes[r].conj();
        if vr == ZERO {
            continue;
        }
        let row: Complex = p.entries[r * d..(r + 1) * d]
            .iter()
            .zip(&v.amplitudes)
            .map(|(m, x)| m * x)
            .sum();
        acc += vr * row;
    }
    acc
}

/// Born weight `⟨v|P|v⟩`, clamped to `[0, 1]`.
pub fn projector_weight(p: &Operator, v: &StateVector) -> Result<f64> {
    p.space.check_same(&v.space)?;
    if !p.is_projector() {
        return Err(Error::NotProjector { deviation: f64::NAN });
    }
    v.require_normalized(ARITHMETIC_TOL)?;
    Ok(expectation(p, v).re.clamp(0.0, 1.0))
}

/// Checks that every pair of projectors in the set has `PᵢPⱼ = 0`.
pub fn check_mutually_orthogonal(projectors: &[&Operator]) -> Result<()> {
    for (i, a) in projectors.iter().enumerate() {
        if !a.is_projector() {
            return Err(Error::InvalidAbsorberSet(format!(
                "operator {i} is not flagged as a projector"
            )));
        }
        for (j, b) in projectors.iter().enumerate().skip(i + 1) {
            let overlap = a.compose(b)?;
            let size = overlap.entries.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if size > ARITHMETIC_TOL {
                return Err(Error::InvalidAbsorberSet(format!(
                    "projectors {i} and {j} overlap (max |PᵢPⱼ| = {size:e})"
                )));
            }
        }
    }
    Ok(())
}

/// `(I − ΣPᵢ)|v⟩` renormalized, or `None` when nothing survives the projection.
pub fn complement_renormalize(
    absorbed: &[&Operator],
    v: &StateVector,
) -> Result<Option<StateVector>> {
    for p in absorbed {
        p.space.check_same(&v.space)?;
    }
    check_mutually_orthogonal(absorbed)?;
    let mut residual = v.amplitudes.clone();
    for p in absorbed {
        let projected = apply(p, v)?;
        for (r, x) in residual.iter_mut().zip(projected.amplitudes) {
            *r -= x;
        }
    }
    let norm_sqr: f64 = residual.iter().map(|z| z.norm_sqr()).sum();
    if norm_sqr < RESIDUAL_FLOOR {
        return Ok(None);
    }
    let scale = 1.0 / norm_sqr.sqrt();
    Ok(Some(StateVector {
        space: v.space.clone(),
        amplitudes: residual.into_iter().map(|z| z * scale).collect(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn plus() -> StateVector {
        StateVector::normalized(Space::qubit(), vec![c(FRAC_1_SQRT_2, 0.0); 2]).unwrap()
    }

    fn hadamard() -> Operator {
        let h = FRAC_1_SQRT_2;
        Operator::unitary(Space::qubit(), vec![c(h, 0.), c(h, 0.), c(h, 0.), c(-h, 0.)]).unwrap()
    }

    #[test]
    fn space_rejects_duplicates_and_empty() {
        assert_eq!(Space::new(["a", "a"]).unwrap_err(), Error::DuplicateLabel("a".into()));
        assert_eq!(Space::new(Vec::<String>::new()).unwrap_err(), Error::EmptySpace);
    }

    #[test]
    fn inner_product_examples() {
        let zero = StateVector::basis(Space::qubit(), "0").unwrap();
        let one = StateVector::basis(Space::qubit(), "1").unwrap();
        assert_eq!(inner_product(&zero, &zero).unwrap(), c(1.0, 0.0));
        assert_eq!(inner_product(&zero, &one).unwrap(), c(0.0, 0.0));

        // brute-force summation over explicit components
        let oracle: Complex = (0..2)
            .map(|k| plus().amplitudes()[k].conj() * zero.amplitudes()[k])
            .fold(c(0.0, 0.0), |acc, z| acc + z);
        let got = inner_product(&plus(), &zero).unwrap();
        assert!((got - oracle).norm() < 1e-15);
        assert!((got - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn space_mismatch_is_an_error() {
        let a = StateVector::basis(Space::qubit(), "0").unwrap();
        let b = StateVector::basis(Space::new(["up", "down"]).unwrap(), "up").unwrap();
        assert!(matches!(inner_product(&a, &b), Err(Error::SpaceMismatch { .. })));
        assert!(matches!(apply(&hadamard(), &b), Err(Error::SpaceMismatch { .. })));
    }

    #[test]
    fn tensor_examples() {
        let zero = StateVector::basis(Space::qubit(), "0").unwrap();
        let one = StateVector::basis(Space::qubit(), "1").unwrap();
        let t = tensor(&zero, &one).unwrap();
        assert_eq!(t.space().labels(), ["00", "01", "10", "11"]);
        assert_eq!(t.amplitude("01").unwrap(), c(1.0, 0.0));
        assert_eq!(t.norm_sqr(), 1.0);

        let t = tensor(&plus(), &zero).unwrap();
        let h = FRAC_1_SQRT_2;
        assert_eq!(t.amplitudes(), [c(h, 0.), c(0., 0.), c(h, 0.), c(0., 0.)]);
    }

    #[test]
    fn tensor_label_collision_is_reported() {
        let a = StateVector::basis(Space::new(["a", "ab"]).unwrap(), "a").unwrap();
        let b = StateVector::basis(Space::new(["bc", "c"]).unwrap(), "c").unwrap();
        assert_eq!(tensor(&a, &b).unwrap_err(), Error::DuplicateLabel("abc".into()));
    }

    #[test]
    fn apply_examples() {
        let zero = StateVector::basis(Space::qubit(), "0").unwrap();
        let id = Operator::identity(Space::qubit());
        assert_eq!(apply(&id, &plus()).unwrap(), plus());

        // explicit multiplication: rows of H times (1, 0)
        let out = apply(&hadamard(), &zero).unwrap();
        let expected = [hadamard().entry(0, 0), hadamard().entry(1, 0)];
        assert_eq!(out.amplitudes(), expected);
        assert!(out.max_abs_diff(&plus()).unwrap() < 1e-15);

        let p = Operator::basis_projector(Space::qubit(), &["0"]).unwrap();
        let once = apply(&p, &plus()).unwrap();
        assert_eq!(apply(&p, &once).unwrap(), once);
    }

    #[test]
    fn projector_weight_examples() {
        let zero = StateVector::basis(Space::qubit(), "0").unwrap();
        let p0 = Operator::basis_projector(Space::qubit(), &["0"]).unwrap();
        let p1 = Operator::basis_projector(Space::qubit(), &["1"]).unwrap();
        assert_eq!(projector_weight(&p0, &zero).unwrap(), 1.0);
        let w0 = projector_weight(&p0, &plus()).unwrap();
        assert!((w0 - 0.5).abs() < 1e-15);
        let w1 = projector_weight(&p1, &plus()).unwrap();
        assert!((w0 + w1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn projector_weight_rejects_unnormalized_and_general() {
        let v = StateVector::new(Space::qubit(), vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let p0 = Operator::basis_projector(Space::qubit(), &["0"]).unwrap();
        assert!(matches!(projector_weight(&p0, &v), Err(Error::NotNormalized { .. })));
        assert!(matches!(
            projector_weight(&hadamard(), &plus()),
            Err(Error::NotProjector { .. })
        ));
    }

    #[test]
    fn construction_checks() {
        let q = Space::qubit();
        assert!(matches!(
            StateVector::normalized(q.clone(), vec![c(1.0, 0.0), c(1e-6, 0.0)]),
            Err(Error::NotNormalized { .. })
        ));
        assert_eq!(
            StateVector::new(q.clone(), vec![c(f64::NAN, 0.0), c(0.0, 0.0)]).unwrap_err(),
            Error::NonFinite(0)
        );
        assert!(matches!(
            StateVector::new(q.clone(), vec![c(1.0, 0.0)]),
            Err(Error::DimensionMismatch { .. })
        ));
        // not idempotent
        assert!(matches!(
            Operator::projector(q.clone(), vec![c(2.0, 0.), c(0., 0.), c(0., 0.), c(0., 0.)]),
            Err(Error::NotProjector { .. })
        ));
        // idempotent but not Hermitian
        assert!(matches!(
            Operator::projector(q.clone(), vec![c(1.0, 0.), c(1., 0.), c(0., 0.), c(0., 0.)]),
            Err(Error::NotProjector { .. })
        ));
        assert!(matches!(
            Operator::unitary(q, vec![c(1.0, 0.), c(1., 0.), c(0., 0.), c(1., 0.)]),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn complement_renormalize_examples() {
        let p0 = Operator::basis_projector(Space::qubit(), &["0"]).unwrap();
        let p1 = Operator::basis_projector(Space::qubit(), &["1"]).unwrap();
        let one = StateVector::basis(Space::qubit(), "1").unwrap();
        let r = complement_renormalize(&[&p0], &plus()).unwrap().unwrap();
        assert!(r.max_abs_diff(&one).unwrap() < 1e-15);
        assert_eq!(complement_renormalize(&[], &plus()).unwrap().unwrap(), plus());
        assert_eq!(complement_renormalize(&[&p0, &p1], &plus()).unwrap(), None);
    }

    #[test]
    fn complement_renormalize_rejects_overlap() {
        let p0 = Operator::basis_projector(Space::qubit(), &["0"]).unwrap();
        let pp = Operator::rank_one(&plus()).unwrap();
        assert!(matches!(
            complement_renormalize(&[&p0, &pp], &plus()),
            Err(Error::InvalidAbsorberSet(_))
        ));
    }

    #[test]
    fn operator_tensor_keeps_kind() {
        let hh = hadamard().tensor(&hadamard()).unwrap();
        assert!(hh.is_unitary());
        let p = Operator::basis_projector(Space::qubit(), &["0"]).unwrap();
        let pi = p.tensor(&Operator::identity(Space::qubit())).unwrap();
        assert_eq!(pi.kind(), OperatorKind::General);
        assert!(pi.into_projector().is_ok());
    }
}
