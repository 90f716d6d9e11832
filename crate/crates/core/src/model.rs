//! States, time grids, projector families and the [`QuantumModel`] that ties
//! them together.
//!
//! Operators on the grid are Schrödinger-picture; Heisenberg-picture
//! projectors use `t₀` as the reference time, i.e.
//! `P(t_k) = W_k† P W_k` with `W_k = U_{k-1}···U_0`.
//!
//! Time reversal is the antiunitary "complex conjugation in the declared
//! basis": with the basis vectors as columns of `B`, a vector `ψ` maps to
//! `B (B†ψ)*`, i.e. `Θ = C·K` with `C = B Bᵀ`. For `B = I` this is plain
//! entrywise conjugation.

use log::warn;

use crate::error::{Error, Result};
use crate::linalg::{inner, norm, C64, ComplexMatrix};

/// Hermiticity, trace and positivity tolerance for density operators.
pub const STATE_TOL: f64 = 1e-10;
/// Norm tolerance for state vectors.
pub const VECTOR_NORM_TOL: f64 = 1e-12;
/// `U U† = I` tolerance for step unitaries and conjugation bases.
pub const UNITARY_TOL: f64 = 1e-10;
/// Idempotence, orthogonality and completeness tolerance for projector families.
pub const PROJECTOR_TOL: f64 = 1e-10;
/// Eigenvalues of a state below this are treated as null directions.
pub const NULL_EIGENVALUE: f64 = 1e-14;

/// Unit-norm state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidState("empty state vector".into()));
        }
        if amps.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        let n = norm(&amps);
        if (n - 1.0).abs() > VECTOR_NORM_TOL {
            return Err(Error::InvalidState(format!("state vector norm {n} is not 1")));
        }
        Ok(Self { amps })
    }

    /// Rescales to unit norm; fails on (numerically) zero vectors.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        let n = norm(&amps);
        if n.is_nan() || n <= 1e-300 || !n.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Self::new(amps.into_iter().map(|z| z / n).collect())
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        assert!(k < dim, "basis index {k} out of range for dimension {dim}");
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[k] = C64::new(1.0, 0.0);
        Self { amps }
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    /// `|ψ⟩⟨ψ|`
    pub fn density(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amps, &self.amps)
    }

    /// `|⟨self|other⟩|²`
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        inner(&self.amps, &other.amps).norm_sqr()
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let amps = self
            .amps
            .iter()
            .flat_map(|a| other.amps.iter().map(move |b| a * b))
            .collect();
        Self { amps }
    }
}

/// Density operator: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug)]
pub struct StateOperator {
    rho: ComplexMatrix,
    vector: Option<StateVector>,
}

impl StateOperator {
    pub fn new(rho: ComplexMatrix) -> Result<Self> {
        if !rho.is_square() {
            return Err(Error::NotSquare {
                rows: rho.rows(),
                cols: rho.cols(),
            });
        }
        let herm = rho.hermiticity_deviation();
        if herm > STATE_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = rho.trace()?;
        if (tr - C64::new(1.0, 0.0)).norm() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min_eig = rho.hermitian_part().herm_eig()?.values[0];
        if min_eig < -STATE_TOL {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite (min eigenvalue {min_eig:e})"
            )));
        }
        Ok(Self { rho, vector: None })
    }

    pub fn pure(psi: StateVector) -> Self {
        Self {
            rho: psi.density(),
            vector: Some(psi),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            rho: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
            vector: None,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.rows()
    }

    /// True when the state was constructed from (or evolved from) a vector.
    pub fn purity_hint(&self) -> bool {
        self.vector.is_some()
    }

    pub fn vector(&self) -> Option<&StateVector> {
        self.vector.as_ref()
    }

    /// `Tr ρ²`
    pub fn purity(&self) -> f64 {
        self.rho.trace_product(&self.rho).expect("square").re
    }

    /// The state's vector if it is pure: either the construction vector or
    /// the top eigenvector of a rank-1 density matrix.
    pub fn pure_vector(&self) -> Option<StateVector> {
        if let Some(v) = &self.vector {
            return Some(v.clone());
        }
        let eig = self.rho.hermitian_part().herm_eig().ok()?;
        let n = eig.values.len();
        if eig.values[n - 1] >= 1.0 - STATE_TOL {
            StateVector::normalized(eig.vectors.column(n - 1)).ok()
        } else {
            None
        }
    }

    /// Columns `√λ_k e_k` with `ρ = Σ_k (√λ_k e_k)(√λ_k e_k)†`, dropping
    /// eigenvalues below [`NULL_EIGENVALUE`].
    pub fn branch_columns(&self) -> Vec<Vec<C64>> {
        let eig = self
            .rho
            .hermitian_part()
            .herm_eig()
            .expect("validated state is Hermitian");
        eig.values
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, &lam)| lam > NULL_EIGENVALUE)
            .map(|(k, &lam)| {
                let s = lam.sqrt();
                eig.vectors.column(k).into_iter().map(|z| z * s).collect()
            })
            .collect()
    }

    /// `U ρ U†`; a construction vector is carried along as `U ψ`.
    pub fn evolved(&self, u: &ComplexMatrix) -> Result<StateOperator> {
        let rho = u.matmul(&self.rho)?.matmul(&u.adjoint())?;
        let vector = match &self.vector {
            Some(v) => Some(StateVector::normalized(u.matvec(v.amplitudes())?)?),
            None => None,
        };
        Ok(Self { rho, vector })
    }

    /// Lüders update `P ρ P / p` with `p = Tr(P ρ P)`; `None` state when
    /// `p` is at or below [`NULL_EIGENVALUE`].
    pub fn projected(&self, p: &ComplexMatrix) -> Result<(f64, Option<StateOperator>)> {
        if let Some(v) = &self.vector {
            let w = p.matvec(v.amplitudes())?;
            let prob = crate::linalg::norm_sqr(&w);
            if prob <= NULL_EIGENVALUE {
                return Ok((prob, None));
            }
            return Ok((prob, Some(StateOperator::pure(StateVector::normalized(w)?))));
        }
        let prp = p.matmul(&self.rho)?.matmul(p)?;
        let prob = prp.trace()?.re;
        if prob <= NULL_EIGENVALUE {
            return Ok((prob, None));
        }
        Ok((
            prob,
            Some(StateOperator {
                rho: prp.scale_real(1.0 / prob).hermitian_part(),
                vector: None,
            }),
        ))
    }

    /// Normalized mixture `(ρ + σ)/2`.
    pub fn average(&self, other: &StateOperator) -> Result<StateOperator> {
        StateOperator::new((&self.rho + &other.rho).scale_real(0.5))
    }
}

/// One interval of dynamics, either an explicit unitary or a Hermitian
/// generator integrated over the interval length.
#[derive(Clone, Debug)]
pub enum Step {
    Unitary(ComplexMatrix),
    Generator(ComplexMatrix),
}

/// Strictly increasing times with one unitary per interval.
#[derive(Clone, Debug)]
pub struct TimeGrid {
    times: Vec<f64>,
    steps: Vec<ComplexMatrix>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>, steps: Vec<Step>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidGrid("grid needs at least one time".into()));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid("non-finite time".into()));
        }
        if let Some(w) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "times must be strictly increasing (t[{}] = {} >= t[{}] = {})",
                w,
                times[w],
                w + 1,
                times[w + 1]
            )));
        }
        if steps.len() + 1 != times.len() {
            return Err(Error::InvalidGrid(format!(
                "{} times need {} steps, got {}",
                times.len(),
                times.len() - 1,
                steps.len()
            )));
        }
        let mut unitaries = Vec::with_capacity(steps.len());
        for (k, step) in steps.into_iter().enumerate() {
            let u = match step {
                Step::Unitary(u) => u,
                Step::Generator(h) => crate::linalg::exp_generator(&h, times[k + 1] - times[k])?,
            };
            let deviation = u.unitarity_deviation();
            if deviation > UNITARY_TOL {
                return Err(Error::InvalidGrid(format!(
                    "step {k} is not unitary (deviation {deviation:e})"
                )));
            }
            unitaries.push(u);
        }
        if let Some(first) = unitaries.first() {
            let d = first.rows();
            if unitaries.iter().any(|u| u.rows() != d) {
                return Err(Error::InvalidGrid("step unitaries have different dimensions".into()));
            }
        }
        Ok(Self {
            times,
            steps: unitaries,
        })
    }

    pub fn from_unitaries(times: Vec<f64>, unitaries: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(times, unitaries.into_iter().map(Step::Unitary).collect())
    }

    /// Grid with identity dynamics.
    pub fn trivial(times: Vec<f64>, dim: usize) -> Result<Self> {
        let n = times.len().saturating_sub(1);
        Self::from_unitaries(times, vec![ComplexMatrix::identity(dim); n])
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Unitary for the interval `t_k → t_{k+1}`.
    pub fn steps(&self) -> &[ComplexMatrix] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_index(&self) -> usize {
        self.times.len() - 1
    }
}

/// A labelled member of a [`ProjectorFamily`].
#[derive(Clone, Debug)]
pub struct Projector {
    pub label: String,
    pub matrix: ComplexMatrix,
}

/// Exhaustive family of mutually orthogonal projectors attached to one grid time.
#[derive(Clone, Debug)]
pub struct ProjectorFamily {
    time_index: usize,
    members: Vec<Projector>,
}

fn check_near(what: &str, deviation: f64, tol: f64) -> Result<()> {
    if deviation <= tol {
        Ok(())
    } else if deviation <= 10.0 * tol {
        warn!("projector family: {what} deviation {deviation:e} exceeds {tol:e}");
        Ok(())
    } else {
        Err(Error::InvalidFamily(format!("{what} (deviation {deviation:e})")))
    }
}

impl ProjectorFamily {
    /// Validates idempotence, Hermiticity, mutual orthogonality and
    /// completeness. Deviations up to ten times [`PROJECTOR_TOL`] are
    /// accepted with a warning.
    pub fn new(time_index: usize, members: Vec<(String, ComplexMatrix)>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidFamily("family has no members".into()));
        }
        let dim = members[0].1.rows();
        for (label, p) in &members {
            if p.rows() != dim || p.cols() != dim {
                return Err(Error::InvalidFamily(format!(
                    "member {label:?} is {}x{}, expected {dim}x{dim}",
                    p.rows(),
                    p.cols()
                )));
            }
        }
        for (i, (label, _)) in members.iter().enumerate() {
            if members[..i].iter().any(|(l, _)| l == label) {
                return Err(Error::InvalidFamily(format!("duplicate label {label:?}")));
            }
        }
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for (i, (label, p)) in members.iter().enumerate() {
            check_near(&format!("member {label:?} not Hermitian"), p.hermiticity_deviation(), PROJECTOR_TOL)?;
            let p2 = p.matmul(p)?;
            check_near(&format!("member {label:?} not idempotent"), p2.max_abs_diff(p), PROJECTOR_TOL)?;
            for (other_label, q) in &members[i + 1..] {
                check_near(
                    &format!("members {label:?} and {other_label:?} not orthogonal"),
                    p.matmul(q)?.max_abs(),
                    PROJECTOR_TOL,
                )?;
            }
            sum = &sum + p;
        }
        check_near(
            "family not exhaustive",
            sum.max_abs_diff(&ComplexMatrix::identity(dim)),
            PROJECTOR_TOL,
        )?;
        Ok(Self {
            time_index,
            members: members
                .into_iter()
                .map(|(label, matrix)| Projector { label, matrix })
                .collect(),
        })
    }

    /// Projectors onto spans of columns of an orthonormal `basis`; the
    /// blocks must partition the column indices.
    pub fn from_basis(time_index: usize, basis: &ComplexMatrix, blocks: &[(&str, &[usize])]) -> Result<Self> {
        let dim = basis.rows();
        let mut seen = vec![false; basis.cols()];
        let mut members = Vec::with_capacity(blocks.len());
        for (label, idx) in blocks {
            let mut cols = Vec::with_capacity(idx.len());
            for &j in *idx {
                if j >= basis.cols() || seen[j] {
                    return Err(Error::InvalidFamily(format!(
                        "basis index {j} in block {label:?} is out of range or repeated"
                    )));
                }
                seen[j] = true;
                cols.push(basis.column(j));
            }
            let refs: Vec<&[C64]> = cols.iter().map(Vec::as_slice).collect();
            members.push((label.to_string(), ComplexMatrix::projector_onto(&refs, dim)));
        }
        Self::new(time_index, members)
    }

    /// Rank-1 projectors onto every column of `basis`, labelled `"0"`, `"1"`, ….
    pub fn rank_one(time_index: usize, basis: &ComplexMatrix) -> Result<Self> {
        let labels: Vec<String> = (0..basis.cols()).map(|j| j.to_string()).collect();
        let idx: Vec<[usize; 1]> = (0..basis.cols()).map(|j| [j]).collect();
        let blocks: Vec<(&str, &[usize])> = labels
            .iter()
            .zip(&idx)
            .map(|(l, i)| (l.as_str(), i.as_slice()))
            .collect();
        Self::from_basis(time_index, basis, &blocks)
    }

    pub fn time_index(&self) -> usize {
        self.time_index
    }

    pub fn members(&self) -> &[Projector] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.members[0].matrix.rows()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.members.iter().map(|m| m.label.as_str()).collect()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.members.iter().position(|m| m.label == label)
    }

    /// Same projectors attached to a different grid time.
    pub fn at_time(&self, time_index: usize) -> ProjectorFamily {
        ProjectorFamily {
            time_index,
            members: self.members.clone(),
        }
    }

    /// Applies `f` to every member matrix, revalidating the result.
    pub fn map_matrices(
        &self,
        time_index: usize,
        mut f: impl FnMut(&ComplexMatrix) -> ComplexMatrix,
    ) -> Result<ProjectorFamily> {
        Self::new(
            time_index,
            self.members
                .iter()
                .map(|m| (m.label.clone(), f(&m.matrix)))
                .collect(),
        )
    }
}

/// Initial state, dynamics, history families and the antiunitary convention.
#[derive(Clone, Debug)]
pub struct QuantumModel {
    dim: usize,
    initial_state: StateOperator,
    grid: TimeGrid,
    families: Vec<ProjectorFamily>,
    conjugation_basis: ComplexMatrix,
    factors: Option<Vec<usize>>,
    cumulative: Vec<ComplexMatrix>,
}

impl QuantumModel {
    pub fn new(initial_state: StateOperator, grid: TimeGrid, families: Vec<ProjectorFamily>) -> Result<Self> {
        let dim = initial_state.dim();
        if let Some(u) = grid.steps().first() {
            if u.rows() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "step unitaries are {}x{}, state is {dim}x{dim}",
                    u.rows(),
                    u.cols()
                )));
            }
        }
        let last = grid.last_index();
        let mut prev: Option<usize> = None;
        for (k, fam) in families.iter().enumerate() {
            if fam.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "family {k} acts on dimension {}, model dimension is {dim}",
                    fam.dim()
                )));
            }
            let ti = fam.time_index();
            if ti == 0 || ti >= last {
                return Err(Error::InvalidFamily(format!(
                    "family {k} time index {ti} must lie strictly inside the grid (0, {last})"
                )));
            }
            if prev.is_some_and(|p| ti <= p) {
                return Err(Error::InvalidFamily(format!(
                    "family time indices must be strictly increasing (family {k} at {ti})"
                )));
            }
            prev = Some(ti);
        }
        let mut cumulative = Vec::with_capacity(grid.len());
        cumulative.push(ComplexMatrix::identity(dim));
        for u in grid.steps() {
            let next = u.matmul(cumulative.last().expect("nonempty"))?;
            cumulative.push(next);
        }
        Ok(Self {
            dim,
            initial_state,
            grid,
            families,
            conjugation_basis: ComplexMatrix::identity(dim),
            factors: None,
            cumulative,
        })
    }

    pub fn with_conjugation_basis(mut self, basis: ComplexMatrix) -> Result<Self> {
        if basis.rows() != self.dim || basis.cols() != self.dim {
            return Err(Error::DimensionMismatch("conjugation basis has wrong shape".into()));
        }
        let deviation = basis.unitarity_deviation();
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        self.conjugation_basis = basis;
        Ok(self)
    }

    /// Declares a tensor-factor structure (used for reduced states).
    pub fn with_factors(mut self, factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() || factors.iter().product::<usize>() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "factors {factors:?} do not multiply to {}",
                self.dim
            )));
        }
        self.factors = Some(factors);
        Ok(self)
    }

    /// Same dynamics and conventions with a different initial state.
    pub fn with_initial_state(&self, state: StateOperator) -> Result<Self> {
        if state.dim() != self.dim {
            return Err(Error::DimensionMismatch("state has wrong dimension".into()));
        }
        let mut m = self.clone();
        m.initial_state = state;
        Ok(m)
    }

    /// Same state and dynamics with different history families.
    pub fn with_families(&self, families: Vec<ProjectorFamily>) -> Result<Self> {
        let m = QuantumModel::new(self.initial_state.clone(), self.grid.clone(), families)?
            .with_conjugation_basis(self.conjugation_basis.clone())?;
        match &self.factors {
            Some(f) => m.with_factors(f.clone()),
            None => Ok(m),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn initial_state(&self) -> &StateOperator {
        &self.initial_state
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn families(&self) -> &[ProjectorFamily] {
        &self.families
    }

    pub fn family(&self, k: usize) -> Result<&ProjectorFamily> {
        self.families
            .get(k)
            .ok_or_else(|| Error::IndexOutOfRange(format!("family {k} of {}", self.families.len())))
    }

    pub fn conjugation_basis(&self) -> &ComplexMatrix {
        &self.conjugation_basis
    }

    pub fn factors(&self) -> Option<&[usize]> {
        self.factors.as_deref()
    }

    /// Cumulative propagator `W_k` from `t₀` to `t_k`.
    pub fn cumulative(&self, k: usize) -> Result<&ComplexMatrix> {
        self.cumulative
            .get(k)
            .ok_or_else(|| Error::IndexOutOfRange(format!("grid index {k} of {}", self.cumulative.len())))
    }

    /// Propagator `U(t_to, t_from)`; the adjoint chain when `to < from`.
    pub fn propagator(&self, from: usize, to: usize) -> Result<ComplexMatrix> {
        let last = self.grid.last_index();
        if from > last || to > last {
            return Err(Error::IndexOutOfRange(format!("grid index beyond {last}")));
        }
        let mut u = ComplexMatrix::identity(self.dim);
        if to >= from {
            for step in &self.grid.steps()[from..to] {
                u = step.matmul(&u)?;
            }
        } else {
            for step in self.grid.steps()[to..from].iter().rev() {
                u = step.adjoint().matmul(&u)?;
            }
        }
        Ok(u)
    }

    /// Heisenberg-picture projector `W† P_α W` for member `member` of family `family`.
    pub fn heisenberg_projector(&self, family: usize, member: usize) -> Result<ComplexMatrix> {
        let fam = self.family(family)?;
        let p = fam
            .members()
            .get(member)
            .ok_or_else(|| Error::IndexOutOfRange(format!("member {member} of family {family}")))?;
        let w = self.cumulative(fam.time_index())?;
        w.adjoint().matmul(&p.matrix)?.matmul(w)
    }

    pub fn heisenberg_family(&self, family: usize) -> Result<Vec<ComplexMatrix>> {
        (0..self.family(family)?.len())
            .map(|m| self.heisenberg_projector(family, m))
            .collect()
    }

    /// `ρ(t_k) = W_k ρ(t₀) W_k†`.
    pub fn evolve_state(&self, k: usize) -> Result<StateOperator> {
        if k == 0 {
            return Ok(self.initial_state.clone());
        }
        self.initial_state.evolved(self.cumulative(k)?)
    }

    /// Matrix `C = B Bᵀ` of the antiunitary `Θ = C·K`.
    pub fn antiunitary_matrix(&self) -> ComplexMatrix {
        antiunitary_matrix(&self.conjugation_basis)
    }

    /// `Θ X Θ⁻¹ = C X* C†`.
    pub fn reverse_operator(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let c = self.antiunitary_matrix();
        &(&c * &x.conj()) * &c.adjoint()
    }
}

/// Matrix part `B Bᵀ` of conjugation in the basis given by the columns of `B`.
pub fn antiunitary_matrix(basis: &ComplexMatrix) -> ComplexMatrix {
    basis * &basis.transpose()
}

/// Time reversal of a state: entrywise conjugation in the declared basis.
pub fn time_reverse_state(state: &StateOperator, conjugation_basis: &ComplexMatrix) -> Result<StateOperator> {
    if conjugation_basis.rows() != state.dim() || !conjugation_basis.is_square() {
        return Err(Error::DimensionMismatch("conjugation basis has wrong shape".into()));
    }
    let deviation = conjugation_basis.unitarity_deviation();
    if deviation > UNITARY_TOL {
        return Err(Error::NotUnitary { deviation });
    }
    let c = antiunitary_matrix(conjugation_basis);
    let rho = &(&c * &state.matrix().conj()) * &c.adjoint();
    let vector = match state.vector() {
        Some(v) => {
            let conj: Vec<C64> = v.amplitudes().iter().map(|z| z.conj()).collect();
            Some(StateVector::normalized(c.matvec(&conj)?)?)
        }
        None => None,
    };
    Ok(StateOperator { rho, vector })
}

/// Reduced state on the factors listed in `keep` (in increasing order).
pub fn partial_trace(state: &StateOperator, dims: &[usize], keep: &[usize]) -> Result<StateOperator> {
    let total: usize = dims.iter().product();
    if dims.is_empty() || total != state.dim() {
        return Err(Error::DimensionMismatch(format!(
            "factor dimensions {dims:?} do not match state dimension {}",
            state.dim()
        )));
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.len() != keep.len() || keep_sorted.iter().any(|&k| k >= dims.len()) {
        return Err(Error::IndexOutOfRange(format!("invalid factor selection {keep:?}")));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep_sorted.contains(k)).collect();
    let kept_dims: Vec<usize> = keep_sorted.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let dk: usize = kept_dims.iter().product();
    let dt: usize = traced_dims.iter().product();

    // strides of each factor in the full row-major index
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let offset = |sel: &[usize], sel_dims: &[usize], mut idx: usize| -> usize {
        let mut off = 0;
        for pos in (0..sel.len()).rev() {
            off += (idx % sel_dims[pos]) * strides[sel[pos]];
            idx /= sel_dims[pos];
        }
        off
    };
    let rho = state.matrix();
    let reduced = ComplexMatrix::from_fn(dk, dk, |i, j| {
        let (oi, oj) = (offset(&keep_sorted, &kept_dims, i), offset(&keep_sorted, &kept_dims, j));
        (0..dt)
            .map(|t| {
                let ot = offset(&traced, &traced_dims, t);
                rho[(oi + ot, oj + ot)]
            })
            .sum()
    });
    StateOperator::new(reduced)
}

/// Outcome of [`is_time_symmetric`].
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryVerdict {
    pub symmetric: bool,
    pub diagnostics: Vec<String>,
}

/// Checks that the grid, the dynamics and the state are symmetric under time
/// reversal about grid index `center`.
///
/// The dynamics condition is `U_{c+j} = C U_{c-1-j}ᵀ C†` (the antiunitary
/// image of the inverse of the mirrored step), which for a real generator in
/// the conjugation basis means the same unitary on both sides.
pub fn is_time_symmetric(model: &QuantumModel, center: usize) -> SymmetryVerdict {
    let mut diagnostics = dynamics_symmetry_diagnostics(model, center);
    if center <= model.grid().last_index() {
        match operator_reversal_deviation(model, model.initial_state().matrix(), center) {
            Ok(dev) if dev > STATE_TOL => {
                diagnostics.push(format!("state at center not time-symmetric (deviation {dev:e})"))
            }
            Ok(_) => {}
            Err(e) => diagnostics.push(format!("cannot evolve to center: {e}")),
        }
    }
    SymmetryVerdict {
        symmetric: diagnostics.is_empty(),
        diagnostics,
    }
}

/// Grid reflection and dynamics conditions of [`is_time_symmetric`]; empty
/// when both hold.
pub fn dynamics_symmetry_diagnostics(model: &QuantumModel, center: usize) -> Vec<String> {
    let mut diagnostics = Vec::new();
    let times = model.grid().times();
    let last = model.grid().last_index();
    if center > last {
        diagnostics.push(format!("center index {center} outside grid"));
        return diagnostics;
    }
    if center != last - center {
        diagnostics.push("grid asymmetric: unequal number of steps on each side".into());
        return diagnostics;
    }
    let tc = times[center];
    for j in 1..=center {
        let before = tc - times[center - j];
        let after = times[center + j] - tc;
        let scale = before.abs().max(after.abs()).max(1.0);
        if (before - after).abs() > 1e-12 * scale {
            diagnostics.push(format!("grid asymmetric at offset {j}"));
            break;
        }
    }
    let c = model.antiunitary_matrix();
    let steps = model.grid().steps();
    for j in 0..center {
        let mirror = &(&c * &steps[center - 1 - j].transpose()) * &c.adjoint();
        let dev = steps[center + j].max_abs_diff(&mirror);
        if dev > UNITARY_TOL {
            diagnostics.push(format!(
                "dynamics not reversal-symmetric: step {} vs step {} (deviation {dev:e})",
                center + j,
                center - 1 - j
            ));
        }
    }
    diagnostics
}

/// `max |Θ X(t_c) Θ⁻¹ − X(t_c)|` for an operator `X` given at `t₀` and
/// carried to grid index `center` by the model dynamics.
pub fn operator_reversal_deviation(model: &QuantumModel, op: &ComplexMatrix, center: usize) -> Result<f64> {
    let w = model.cumulative(center)?;
    let at_center = w.matmul(op)?.matmul(&w.adjoint())?;
    Ok(model.reverse_operator(&at_center).max_abs_diff(&at_center))
}
