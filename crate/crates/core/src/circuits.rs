//! Syndrome extraction by circuits: controlled group multiplications, the
//! Fourier transform on a group algebra, vertex and plaquette syndrome
//! circuits acting on ancilla slots, and the qutrit ⊗ qubit lowering of the
//! six-level gates.
//!
//! A vertex circuit prepares its ancilla in the uniform superposition over the
//! vertex gauge group, applies `A_v^g` to the star controlled on the ancilla
//! value `g`, and measures the ancilla in the Fourier basis. The outcome is an
//! irrep with a (row, column) pair. A plaquette circuit starts from `|e⟩`,
//! multiplies the boundary values onto the ancilla in the order seen from the
//! top-right vertex and measures the group basis. All vertex circuits of a
//! round finish on a shared edge before any plaquette circuit reads it.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::Zero;
use rand::Rng;
use serde::Serialize;

use crate::error::{QdError, Result};
use crate::group::{ambient, irrep_table, s3, Element, FiniteGroup, Irrep, Subgroup};
use crate::lattice::{EdgeId, Lattice, PlaqId, Region, VertexId};
use crate::operators::LinearOp;
use crate::state::{kernel, SparseState};
use crate::{Complex, Real, C64};

/// Which side of the target the control value multiplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    /// `|g⟩|h⟩ → |g⟩|gh⟩`.
    Left,
    /// `|g⟩|h⟩ → |g⟩|hg⁻¹⟩`.
    Right,
}

/// Two-qudit permutation gate on `|control⟩|target⟩`, index `control·n + target`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermGate {
    pub dim: usize,
    pub perm: Vec<usize>,
}

impl PermGate {
    pub fn matrix(&self) -> Vec<Vec<u8>> {
        let n = self.perm.len();
        let mut m = vec![vec![0u8; n]; n];
        for (col, &row) in self.perm.iter().enumerate() {
            m[row][col] = 1;
        }
        m
    }
}

fn controlled_mult(
    g: &FiniteGroup,
    control_dim: usize,
    target_dim: usize,
    side: Side,
) -> Result<PermGate> {
    let n = g.order();
    for (slot, d) in [(0, control_dim), (1, target_dim)] {
        if d != n {
            return Err(QdError::DimensionMismatch {
                slot,
                detail: format!("qudit of dimension {d} for a group of order {n}"),
            });
        }
    }
    let mut perm = vec![0; n * n];
    for c in g.elements() {
        for t in g.elements() {
            let out = match side {
                Side::Left => g.multiply(c, t),
                Side::Right => g.multiply(t, g.inverse(c)),
            };
            perm[c.index() * n + t.index()] = c.index() * n + out.index();
        }
    }
    Ok(PermGate { dim: n, perm })
}

/// `|g⟩|h⟩ → |g⟩|gh⟩` over `C[G]`.
pub fn controlled_left_mult(
    g: &FiniteGroup,
    control_dim: usize,
    target_dim: usize,
) -> Result<PermGate> {
    controlled_mult(g, control_dim, target_dim, Side::Left)
}

/// `|g⟩|h⟩ → |g⟩|hg⁻¹⟩` over `C[G]`.
pub fn controlled_right_mult(
    g: &FiniteGroup,
    control_dim: usize,
    target_dim: usize,
) -> Result<PermGate> {
    controlled_mult(g, control_dim, target_dim, Side::Right)
}

/// Fourier transform on the group algebra of a subgroup of ℤ₂ × S₃.
///
/// Row `k` is labelled `(irrep, i, j)` and holds `√(d/|G|) ρ(g)_ij` in the
/// column of `elements[g]`. The two-dimensional S₃ irrep is written in the
/// basis where the order-three elements are diagonal, so its row index
/// carries a ℤ₃ charge.
#[derive(Debug, Clone)]
pub struct Fourier {
    pub elements: Vec<Element>,
    pub irreps: Vec<Irrep>,
    pub labels: Vec<(usize, usize, usize)>,
    pub matrix: Vec<C64>,
}

impl Fourier {
    pub fn on(elements: &[Element]) -> Result<Self> {
        let sub = Subgroup::from_members(elements.iter().copied());
        let group = ambient::group().subgroup_as_group(&sub)?;
        let mut irreps = irrep_table(&group)?;
        for r in irreps.iter_mut().filter(|r| r.dim == 2) {
            *r = rotate_to_z3_basis(r);
        }
        let n = sub.order();
        let mut labels = Vec::with_capacity(n);
        let mut matrix = Vec::with_capacity(n * n);
        for (k, r) in irreps.iter().enumerate() {
            let w = (r.dim as f64 / n as f64).sqrt();
            for i in 0..r.dim {
                for j in 0..r.dim {
                    labels.push((k, i, j));
                    matrix.extend(group.elements().map(|g| r.entry(g, i, j) * w));
                }
            }
        }
        Ok(Self {
            elements: sub.members,
            irreps,
            labels,
            matrix,
        })
    }

    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.matrix[row * self.dim() + col]
    }

    /// Matrix of `ρ(g)` for an ambient element in a given irrep.
    pub fn rep(&self, irrep: usize, g: Element) -> Option<&[C64]> {
        let pos = self.elements.iter().position(|&x| x == g)?;
        Some(&self.irreps[irrep].matrices[pos])
    }

    fn op<T: Real>(&self, slot: usize) -> LinearOp<T> {
        let matrix = self
            .matrix
            .iter()
            .map(|z| Complex::new(T::c(z.re), T::c(z.im)))
            .collect();
        LinearOp::Dense {
            slot,
            basis: Arc::new(self.elements.clone()),
            matrix: Arc::new(matrix),
        }
    }
}

/// `U† ρ U` with `U = (1/√2)[[1, 1], [-i, i]]`, which diagonalizes rotations.
fn rotate_to_z3_basis(r: &Irrep) -> Irrep {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let u = [
        C64::new(s, 0.0),
        C64::new(s, 0.0),
        C64::new(0.0, -s),
        C64::new(0.0, s),
    ];
    let matrices = r
        .matrices
        .iter()
        .map(|m| {
            let mut out = vec![C64::zero(); 4];
            for a in 0..2 {
                for b in 0..2 {
                    for k in 0..2 {
                        for l in 0..2 {
                            out[a * 2 + b] += u[k * 2 + a].conj() * m[k * 2 + l] * u[l * 2 + b];
                        }
                    }
                }
            }
            out
        })
        .collect();
    Irrep {
        label: r.label.clone(),
        dim: 2,
        matrices,
    }
}

/// Fourier transform on `C[S₃]`.
pub fn fourier_s3() -> Fourier {
    Fourier::on(&s3::ALL).expect("S₃ irreps are tabulated")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Location {
    Vertex(VertexId),
    Plaquette(PlaqId),
}

/// Ancilla attached to a vertex or plaquette.
#[derive(Debug, Clone, Serialize)]
pub struct SyndromeQudit {
    pub location: Location,
    pub dimension: usize,
    pub slot: usize,
}

#[derive(Debug, Clone)]
pub enum Gate {
    /// Resets the ancilla of qudit `q` to its fiducial state.
    Prepare {
        q: usize,
    },
    /// Multiplies the control value (inverted if asked) onto the target.
    CtrlMul {
        control: usize,
        target: usize,
        side: Side,
        invert: bool,
    },
    Fourier {
        q: usize,
    },
    Measure {
        q: usize,
    },
}

/// Ordered gate list of one lockstep round.
#[derive(Debug, Clone)]
pub struct CircuitSchedule {
    pub qudits: Vec<SyndromeQudit>,
    pub gates: Vec<Gate>,
    fourier: BTreeMap<usize, Arc<Fourier>>,
    first_ancilla: usize,
}

/// Which parts of the lattice a schedule measures.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct ScheduleFilter {
    /// Only vertices and plaquettes in these regions; all non-wall regions if empty.
    #[serde(default)]
    pub regions: Vec<Region>,
    /// Vertices whose circuits are switched off, e.g. inside holes.
    #[serde(default)]
    pub disabled: Vec<VertexId>,
}

impl CircuitSchedule {
    /// Every vertex circuit, then every plaquette circuit. Ancilla slots start at `first_ancilla`.
    pub fn lockstep(lat: &Lattice, filter: &ScheduleFilter, first_ancilla: usize) -> Result<Self> {
        let keep = |r: Region| {
            if filter.regions.is_empty() {
                r != Region::Wall
            } else {
                filter.regions.contains(&r)
            }
        };
        let mut qudits = Vec::new();
        let mut slot = first_ancilla;
        for v in 0..lat.num_vertices() {
            if keep(lat.vertex_region(v)) && !filter.disabled.contains(&v) {
                qudits.push(SyndromeQudit {
                    location: Location::Vertex(v),
                    dimension: lat.gauge_group(v).len(),
                    slot,
                });
                slot += 1;
            }
        }
        for p in 0..lat.num_plaquettes() {
            let r = lat.plaquette_region(p);
            if keep(r) {
                qudits.push(SyndromeQudit {
                    location: Location::Plaquette(p),
                    dimension: flux_values(lat, p).len(),
                    slot,
                });
                slot += 1;
            }
        }
        let mut gates = Vec::new();
        for (q, sq) in qudits.iter().enumerate() {
            gates.push(Gate::Prepare { q });
            gates.extend(circuit_body(lat, sq)?);
            if matches!(sq.location, Location::Vertex(_)) {
                gates.push(Gate::Fourier { q });
            }
            gates.push(Gate::Measure { q });
        }
        Self::from_gates(lat, qudits, gates, first_ancilla)
    }

    /// Validates a hand-written gate list.
    pub fn from_gates(
        lat: &Lattice,
        qudits: Vec<SyndromeQudit>,
        gates: Vec<Gate>,
        first_ancilla: usize,
    ) -> Result<Self> {
        let mut fourier = BTreeMap::new();
        for (q, sq) in qudits.iter().enumerate() {
            if sq.slot < lat.num_edges() || sq.slot < first_ancilla {
                return Err(QdError::Schedule(format!(
                    "qudit {q} sits on data slot {}",
                    sq.slot
                )));
            }
            if let Location::Vertex(v) = sq.location {
                fourier.insert(q, Arc::new(Fourier::on(lat.gauge_group(v))?));
            }
        }
        let s = Self {
            qudits,
            gates,
            fourier,
            first_ancilla,
        };
        s.validate(lat)?;
        Ok(s)
    }

    pub fn num_ancillas(&self) -> usize {
        self.qudits.len()
    }

    fn qudit_of_slot(&self, slot: usize) -> Option<usize> {
        self.qudits.iter().position(|q| q.slot == slot)
    }

    fn validate(&self, lat: &Lattice) -> Result<()> {
        // 0 = idle, 1 = prepared, 2 = measured
        let mut phase = vec![0u8; self.qudits.len()];
        let mut body: Vec<Vec<EdgeId>> = vec![Vec::new(); self.qudits.len()];
        let mut vertex_done: BTreeMap<EdgeId, usize> = BTreeMap::new();
        let mut plaquette_first: BTreeMap<EdgeId, usize> = BTreeMap::new();
        let live = |phase: &[u8], q: usize, k: usize| {
            if phase[q] == 1 {
                Ok(())
            } else {
                Err(QdError::Schedule(format!(
                    "gate {k} acts on qudit {q} outside its prepare/measure window"
                )))
            }
        };
        for (k, g) in self.gates.iter().enumerate() {
            match *g {
                Gate::Prepare { q } => {
                    if phase.get(q) != Some(&0) {
                        return Err(QdError::Schedule(format!("qudit {q} prepared twice")));
                    }
                    phase[q] = 1;
                }
                Gate::Fourier { q } => {
                    live(&phase, q, k)?;
                    if !self.fourier.contains_key(&q) {
                        return Err(QdError::Schedule(format!(
                            "Fourier gate on plaquette qudit {q}"
                        )));
                    }
                }
                Gate::Measure { q } => {
                    live(&phase, q, k)?;
                    phase[q] = 2;
                }
                Gate::CtrlMul {
                    control, target, ..
                } => {
                    let (q, edge) = match (self.qudit_of_slot(control), self.qudit_of_slot(target))
                    {
                        (Some(q), None) if target < lat.num_edges() => (q, target),
                        (None, Some(q)) if control < lat.num_edges() => (q, control),
                        _ => {
                            return Err(QdError::Schedule(format!(
                                "gate {k} must couple one ancilla to one edge"
                            )))
                        }
                    };
                    live(&phase, q, k)?;
                    body[q].push(edge);
                    match self.qudits[q].location {
                        Location::Vertex(_) => {
                            vertex_done.insert(edge, k);
                        }
                        Location::Plaquette(_) => {
                            plaquette_first.entry(edge).or_insert(k);
                        }
                    }
                }
            }
        }
        if let Some(q) = phase.iter().position(|&p| p != 2) {
            return Err(QdError::Schedule(format!("qudit {q} is never measured")));
        }
        for (e, last) in &vertex_done {
            if let Some(first) = plaquette_first.get(e) {
                if first < last {
                    return Err(QdError::Schedule(format!(
                        "plaquette circuit reads edge {e} before a vertex circuit has finished with it"
                    )));
                }
            }
        }
        for (q, sq) in self.qudits.iter().enumerate() {
            let expected: Vec<EdgeId> = circuit_order(lat, sq.location)?;
            if body[q] != expected {
                return Err(QdError::Schedule(format!(
                    "qudit {q} does not follow the zig-zag edge order"
                )));
            }
        }
        Ok(())
    }
}

/// Flux values a plaquette can carry.
fn flux_values(lat: &Lattice, p: PlaqId) -> Vec<Element> {
    let r = lat.plaquette_region(p);
    (0..12u8)
        .map(Element)
        .filter(|&g| lat.project(r, g) == g)
        .collect()
}

fn circuit_order(lat: &Lattice, loc: Location) -> Result<Vec<EdgeId>> {
    Ok(match loc {
        Location::Vertex(v) => lat.star(v).iter().map(|&(e, _)| e).collect(),
        Location::Plaquette(p) => lat
            .boundary(lat.canonical_site(p))?
            .iter()
            .map(|&(e, _)| e)
            .collect(),
    })
}

fn circuit_body(lat: &Lattice, sq: &SyndromeQudit) -> Result<Vec<Gate>> {
    let a = sq.slot;
    Ok(match sq.location {
        // toward v: x ↦ g x; away from v: x ↦ x g⁻¹.
        Location::Vertex(v) => lat
            .star(v)
            .iter()
            .map(|&(e, toward)| Gate::CtrlMul {
                control: a,
                target: e,
                side: if toward { Side::Left } else { Side::Right },
                invert: false,
            })
            .collect(),
        // Accumulates the ordered boundary product by right multiplication.
        Location::Plaquette(p) => lat
            .boundary(lat.canonical_site(p))?
            .iter()
            .map(|&(e, ccw)| Gate::CtrlMul {
                control: e,
                target: a,
                side: Side::Right,
                invert: !ccw,
            })
            .collect(),
    })
}

fn apply_gate<T: Real>(
    state: &mut SparseState<T>,
    sched: &CircuitSchedule,
    gate: &Gate,
) -> Result<()> {
    let lat = state.lattice().clone();
    let ne = lat.num_edges();
    match *gate {
        Gate::Prepare { q } => {
            let sq = &sched.qudits[q];
            let slot = sq.slot;
            let basis: Vec<Element> = match sq.location {
                Location::Vertex(v) => lat.gauge_group(v).to_vec(),
                Location::Plaquette(_) => vec![Element::IDENTITY],
            };
            let w = Complex::from(T::c(1.0 / (basis.len() as f64).sqrt()));
            // Measurements reset ancillas to |e⟩, so writing the slot prepares the fiducial.
            state.map_configs(|cfg, amp, emit| {
                for &g in &basis {
                    let mut c = *cfg;
                    c.set(slot, g);
                    emit(c, amp * w);
                }
            });
        }
        Gate::CtrlMul {
            control,
            target,
            side,
            invert,
        } => {
            state.map_configs(|cfg, amp, emit| {
                let x = cfg.get(control);
                let g = if invert { ambient::inv(x) } else { x };
                let mut c = *cfg;
                match (side, target < ne) {
                    (Side::Left, true) => kernel::left(&lat, &mut c, target, g),
                    (Side::Right, true) => kernel::right(&lat, &mut c, target, ambient::inv(g)),
                    (Side::Left, false) => c.set(target, ambient::mul(g, c.get(target))),
                    (Side::Right, false) => {
                        c.set(target, ambient::mul(c.get(target), ambient::inv(g)))
                    }
                }
                emit(c, amp);
            });
        }
        Gate::Fourier { q } => {
            sched.fourier[&q]
                .op::<T>(sched.qudits[q].slot)
                .apply(state)?;
        }
        Gate::Measure { .. } => unreachable!("measurements are handled by the runner"),
    }
    Ok(())
}

/// Probability of each ancilla value.
fn ancilla_distribution<T: Real>(state: &SparseState<T>, slot: usize) -> Vec<(Element, f64)> {
    let mut acc: BTreeMap<Element, f64> = BTreeMap::new();
    for (c, a) in state.iter() {
        *acc.entry(c.get(slot)).or_default() += a.norm_sqr().to_f64().unwrap();
    }
    let total: f64 = acc.values().sum();
    acc.into_iter().map(|(g, p)| (g, p / total)).collect()
}

/// Keeps the branch with ancilla value `g`, renormalizes and resets the ancilla to `e`.
fn collapse<T: Real>(state: &mut SparseState<T>, slot: usize, g: Element) -> Result<()> {
    state.map_configs(|cfg, amp, emit| {
        if cfg.get(slot) == g {
            let mut c = *cfg;
            c.set(slot, Element::IDENTITY);
            emit(c, amp);
        }
    });
    state.normalize()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexOutcome {
    pub vertex: VertexId,
    pub irrep: String,
    pub irrep_index: usize,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaquetteOutcome {
    pub plaquette: PlaqId,
    pub vertex: VertexId,
    pub flux: u8,
    pub class: String,
}

/// Anyon label read off a site from its vertex and plaquette outcomes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiteOutcome {
    pub plaquette: PlaqId,
    pub vertex: VertexId,
    pub label: String,
    /// The outcomes are compatible with more than one label.
    pub ambiguous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyndromeRecord {
    pub vertices: Vec<VertexOutcome>,
    pub plaquettes: Vec<PlaquetteOutcome>,
    pub sites: Vec<SiteOutcome>,
    /// Probability of this record given the input state.
    pub probability: f64,
}

impl SyndromeRecord {
    /// Sites whose label is not the vacuum.
    pub fn excitations(&self) -> Vec<&SiteOutcome> {
        self.sites
            .iter()
            .filter(|s| s.label != "A" && s.label != "1")
            .collect()
    }

    pub fn ambiguous(&self) -> Vec<&SiteOutcome> {
        self.sites.iter().filter(|s| s.ambiguous).collect()
    }
}

fn class_name(g: Element) -> String {
    let s = ambient::s3_part(g);
    let z = if ambient::z2_part(g) == 1 { "x" } else { "" };
    let c = match s {
        s3::E => "",
        s3::C | s3::C2 => "c",
        _ => "t",
    };
    match (z, c) {
        ("", "") => "[e]".into(),
        (z, c) => format!("[{z}{c}]"),
    }
}

fn label_site(
    lat: &Lattice,
    sched: &CircuitSchedule,
    vq: Option<(usize, &VertexOutcome)>,
    p: &PlaquetteOutcome,
) -> SiteOutcome {
    let out = |label: &str, ambiguous: bool| SiteOutcome {
        plaquette: p.plaquette,
        vertex: p.vertex,
        label: label.to_string(),
        ambiguous,
    };
    let Some((q, v)) = vq else {
        return out(&class_name(Element(p.flux)), true);
    };
    let h = Element(p.flux);
    match lat.plaquette_region(p.plaquette) {
        Region::Z2 if lat.vertex_region(p.vertex) == Region::Z2 => {
            let label = match (h == Element::IDENTITY, v.irrep_index) {
                (true, 0) => "1",
                (true, _) => "e",
                (false, 0) => "m",
                (false, _) => "eps",
            };
            out(label, false)
        }
        Region::S3 if lat.vertex_region(p.vertex) == Region::S3 => match ambient::s3_part(h) {
            s3::E => out(&v.irrep, false),
            s3::C | s3::C2 if v.irrep_index < 2 => out("F", false),
            s3::C | s3::C2 => {
                // A^c acts on the post-measurement state as the conjugate of ρ(c)_row,row.
                let rho = sched.fourier[&q]
                    .rep(v.irrep_index, s3::C)
                    .expect("c is in S₃");
                let mu = rho[v.row * 2 + v.row].conj();
                let m = if ambient::s3_part(h) == s3::C { 1 } else { 2 };
                let z = mu.powu(m);
                let omega = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
                if (z - omega.conj()).norm() < 1e-9 {
                    out("G", false)
                } else if (z - omega).norm() < 1e-9 {
                    out("H", false)
                } else {
                    out("F/G/H", true)
                }
            }
            _ => match v.irrep_index {
                0 => out("D", false),
                1 => out("E", false),
                _ => out("D/E", true),
            },
        },
        _ => out(&format!("K{}", v.irrep), true),
    }
}

/// Raw outcome of one measurement: ancilla value.
type Outcomes = Vec<Element>;

fn build_record(
    lat: &Lattice,
    sched: &CircuitSchedule,
    outcomes: &Outcomes,
    probability: f64,
) -> SyndromeRecord {
    let mut vertices = Vec::new();
    let mut vertex_q = BTreeMap::new();
    let mut plaquettes = Vec::new();
    let measured = sched.gates.iter().filter_map(|g| match g {
        Gate::Measure { q } => Some(*q),
        _ => None,
    });
    for (q, &val) in measured.zip(outcomes) {
        match sched.qudits[q].location {
            Location::Vertex(v) => {
                let f = &sched.fourier[&q];
                let k = f
                    .elements
                    .iter()
                    .position(|&g| g == val)
                    .expect("ancilla value in basis");
                let (irrep_index, row, col) = f.labels[k];
                vertex_q.insert(v, (q, vertices.len()));
                vertices.push(VertexOutcome {
                    vertex: v,
                    irrep: f.irreps[irrep_index].label.clone(),
                    irrep_index,
                    row,
                    col,
                });
            }
            Location::Plaquette(p) => {
                let flux = lat.project(lat.plaquette_region(p), val);
                plaquettes.push(PlaquetteOutcome {
                    plaquette: p,
                    vertex: lat.canonical_site(p).v,
                    flux: flux.0,
                    class: class_name(flux),
                });
            }
        }
    }
    let sites = plaquettes
        .iter()
        .map(|p| {
            let vq = vertex_q.get(&p.vertex).map(|&(q, k)| (q, &vertices[k]));
            label_site(lat, sched, vq, p)
        })
        .collect();
    SyndromeRecord {
        vertices,
        plaquettes,
        sites,
        probability,
    }
}

fn prepare_state<T: Real>(
    state: &SparseState<T>,
    sched: &CircuitSchedule,
) -> Result<SparseState<T>> {
    let mut s = state.to_full()?;
    if s.num_slots() != sched.first_ancilla {
        return Err(QdError::Schedule(format!(
            "schedule expects ancillas from slot {}, state has {} slots",
            sched.first_ancilla,
            s.num_slots()
        )));
    }
    for q in &sched.qudits {
        let slot = s.add_ancilla(q.dimension)?;
        debug_assert_eq!(slot, q.slot);
    }
    s.normalize()?;
    Ok(s)
}

fn release<T: Real>(mut state: SparseState<T>, n: usize) -> Result<SparseState<T>> {
    for _ in 0..n {
        state.drop_ancilla()?;
    }
    Ok(state)
}

/// Runs one round, sampling every measurement. Returns the record and the
/// collapsed state without ancillas and without a gauge frame.
pub fn run_syndrome_round<T: Real, R: Rng>(
    state: &SparseState<T>,
    sched: &CircuitSchedule,
    rng: &mut R,
) -> Result<(SyndromeRecord, SparseState<T>)> {
    let lat = state.lattice().clone();
    let mut s = prepare_state(state, sched)?;
    let mut outcomes = Vec::new();
    let mut prob = 1.0;
    for gate in &sched.gates {
        if let Gate::Measure { q } = *gate {
            let slot = sched.qudits[q].slot;
            let dist = ancilla_distribution(&s, slot);
            let r: f64 = rng.gen();
            let mut acc = 0.0;
            let mut pick = dist.len() - 1;
            for (k, (_, p)) in dist.iter().enumerate() {
                acc += p;
                if r < acc {
                    pick = k;
                    break;
                }
            }
            let (g, p) = dist[pick];
            collapse(&mut s, slot, g)?;
            outcomes.push(g);
            prob *= p;
        } else {
            apply_gate(&mut s, sched, gate)?;
        }
    }
    let record = build_record(&lat, sched, &outcomes, prob);
    Ok((record, release(s, sched.num_ancillas())?))
}

/// Exact distribution of round records, branching at every measurement.
/// Fails with a resource error past `max_branches` live branches.
pub fn round_distribution<T: Real>(
    state: &SparseState<T>,
    sched: &CircuitSchedule,
    max_branches: usize,
) -> Result<Vec<SyndromeRecord>> {
    let lat = state.lattice().clone();
    let mut branches = vec![(prepare_state(state, sched)?, Outcomes::new(), 1.0f64)];
    for gate in &sched.gates {
        if let Gate::Measure { q } = *gate {
            let slot = sched.qudits[q].slot;
            let mut next = Vec::new();
            for (s, outs, p) in branches {
                for (g, pg) in ancilla_distribution(&s, slot) {
                    if pg < 1e-13 {
                        continue;
                    }
                    let mut b = s.clone();
                    collapse(&mut b, slot, g)?;
                    let mut o = outs.clone();
                    o.push(g);
                    next.push((b, o, p * pg));
                }
            }
            if next.len() > max_branches {
                return Err(QdError::Resource(format!(
                    "{} outcome branches exceed the budget",
                    next.len()
                )));
            }
            branches = next;
        } else {
            for (s, _, _) in branches.iter_mut() {
                apply_gate(s, sched, gate)?;
            }
        }
    }
    Ok(branches
        .into_iter()
        .map(|(_, o, p)| build_record(&lat, sched, &o, p))
        .collect())
}

/// Marginal label distribution at one site.
pub fn site_marginal(records: &[SyndromeRecord], plaquette: PlaqId) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for r in records {
        if let Some(s) = r.sites.iter().find(|s| s.plaquette == plaquette) {
            *out.entry(s.label.clone()).or_default() += r.probability;
        }
    }
    out
}

/// Gates on `C[S₃]` that have a qutrit ⊗ qubit form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SixLevelGate {
    Left(Element),
    Right(Element),
    Projector(Element),
    ControlledLeft,
    ControlledRight,
    Fourier,
}

pub type Mat = Vec<Vec<C64>>;

/// `A ⊗ B` term with `A` on the qutrit and `B` on the qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct KronTerm {
    pub qutrit: Mat,
    pub qubit: Mat,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Lowered {
    /// Sum of tensor products.
    Terms(Vec<KronTerm>),
    /// `Σ_g |g⟩⟨g| ⊗ U_g` with the control lowered to `|r⟩⟨r| ⊗ |s⟩⟨s|`.
    Controlled(Vec<(KronTerm, Vec<KronTerm>)>),
    /// No tensor structure; the matrix in the index `2r + s`.
    Dense(Mat),
}

fn zeros(n: usize) -> Mat {
    vec![vec![C64::zero(); n]; n]
}

fn perm_mat(n: usize, f: impl Fn(usize) -> usize) -> Mat {
    let mut m = zeros(n);
    for j in 0..n {
        m[f(j)][j] = C64::new(1.0, 0.0);
    }
    m
}

fn ket_bra(n: usize, i: usize, j: usize) -> Mat {
    let mut m = zeros(n);
    m[i][j] = C64::new(1.0, 0.0);
    m
}

/// Generalized Pauli `X^k` on a qutrit.
pub fn qutrit_x(k: usize) -> Mat {
    perm_mat(3, |j| (j + k) % 3)
}

/// Swap of qutrit levels `i` and `j`.
pub fn flip(i: usize, j: usize) -> Mat {
    perm_mat(3, |k| {
        if k == i {
            j
        } else if k == j {
            i
        } else {
            k
        }
    })
}

pub fn sigma_x() -> Mat {
    perm_mat(2, |k| 1 - k)
}

pub fn identity(n: usize) -> Mat {
    perm_mat(n, |k| k)
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    let (n, m) = (a.len(), b.len());
    let mut out = zeros(n * m);
    for i in 0..n {
        for j in 0..n {
            for k in 0..m {
                for l in 0..m {
                    out[i * m + k][j * m + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let mut out = zeros(n);
    for i in 0..n {
        for k in 0..n {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn add(a: &mut Mat, b: &Mat) {
    for (ra, rb) in a.iter_mut().zip(b) {
        for (x, y) in ra.iter_mut().zip(rb) {
            *x += *y;
        }
    }
}

impl KronTerm {
    pub fn matrix(&self) -> Mat {
        kron(&self.qutrit, &self.qubit)
    }
}

impl Lowered {
    /// Full matrix; two-qudit gates use index `6·control + target`.
    pub fn matrix(&self) -> Mat {
        let sum = |terms: &[KronTerm]| {
            let mut m = zeros(6);
            for t in terms {
                add(&mut m, &t.matrix());
            }
            m
        };
        match self {
            Lowered::Terms(t) => sum(t),
            Lowered::Dense(m) => m.clone(),
            Lowered::Controlled(branches) => {
                let mut m = zeros(36);
                for (proj, target) in branches {
                    add(&mut m, &kron(&proj.matrix(), &sum(target)));
                }
                m
            }
        }
    }
}

fn s3_element(g: Element) -> Result<(usize, usize)> {
    if g.index() >= 6 {
        return Err(QdError::UnsupportedGate(format!(
            "element {} is not in S₃",
            g.0
        )));
    }
    let (r, s) = crate::group::qubit_qutrit_encode(g);
    Ok((r as usize, s as usize))
}

fn lower_left(g: Element) -> Result<Vec<KronTerm>> {
    // c^r t^s · c^a t^b = c^{r + (-1)^s a} t^{s + b}
    let (r, s) = s3_element(g)?;
    let qutrit = if s == 0 {
        qutrit_x(r)
    } else {
        perm_mat(3, |a| (r + 3 - a) % 3)
    };
    let qubit = if s == 0 { identity(2) } else { sigma_x() };
    Ok(vec![KronTerm { qutrit, qubit }])
}

fn lower_right(g: Element) -> Result<Vec<KronTerm>> {
    // c^a t^b · c^r t^s = c^{a + (-1)^b r} t^{b + s}
    let (r, s) = s3_element(g)?;
    Ok((0..2)
        .map(|b| KronTerm {
            qutrit: qutrit_x(if b == 0 { r } else { (3 - r) % 3 }),
            qubit: ket_bra(2, (b + s) % 2, b),
        })
        .collect())
}

fn lower_projector(g: Element) -> Result<KronTerm> {
    let (r, s) = s3_element(g)?;
    Ok(KronTerm {
        qutrit: ket_bra(3, r, r),
        qubit: ket_bra(2, s, s),
    })
}

/// Qutrit ⊗ qubit form of a six-level gate under `|r⟩|s⟩ = |c^r t^s⟩`.
pub fn lower_to_qubit_qutrit(gate: SixLevelGate) -> Result<Lowered> {
    Ok(match gate {
        SixLevelGate::Left(g) => Lowered::Terms(lower_left(g)?),
        SixLevelGate::Right(g) => Lowered::Terms(lower_right(g)?),
        SixLevelGate::Projector(g) => Lowered::Terms(vec![lower_projector(g)?]),
        SixLevelGate::ControlledLeft | SixLevelGate::ControlledRight => {
            let right = gate == SixLevelGate::ControlledRight;
            let mut branches = Vec::new();
            for g in s3::ALL {
                let target = if right {
                    lower_right(s3_inverse(g))?
                } else {
                    lower_left(g)?
                };
                branches.push((lower_projector(g)?, target));
            }
            Lowered::Controlled(branches)
        }
        SixLevelGate::Fourier => {
            let f = fourier_s3();
            let mut m = zeros(6);
            for (col, &g) in f.elements.iter().enumerate() {
                let (r, s) = s3_element(g)?;
                for row in 0..6 {
                    m[row][2 * r + s] = f.entry(row, col);
                }
            }
            Lowered::Dense(m)
        }
    })
}

fn s3_inverse(g: Element) -> Element {
    ambient::inv(g)
}

/// Regular-representation matrix of a six-level gate in the group basis, for checking lowerings.
pub fn group_basis_matrix(gate: SixLevelGate) -> Result<Mat> {
    let g6 = FiniteGroup::s3();
    let perm_of = |m: Vec<Vec<u8>>| -> Mat {
        m.into_iter()
            .map(|r| r.into_iter().map(|x| C64::new(x as f64, 0.0)).collect())
            .collect()
    };
    let check = |g: Element| s3_element(g).map(|_| ());
    Ok(match gate {
        SixLevelGate::Left(g) => {
            check(g)?;
            perm_of(g6.left_regular(g))
        }
        SixLevelGate::Right(g) => {
            check(g)?;
            perm_of(g6.right_regular(g))
        }
        SixLevelGate::Projector(g) => {
            check(g)?;
            ket_bra(6, g.index(), g.index())
        }
        SixLevelGate::ControlledLeft => perm_of(controlled_left_mult(&g6, 6, 6)?.matrix()),
        SixLevelGate::ControlledRight => perm_of(controlled_right_mult(&g6, 6, 6)?.matrix()),
        SixLevelGate::Fourier => {
            let f = fourier_s3();
            (0..6)
                .map(|i| (0..6).map(|j| f.entry(i, j)).collect())
                .collect()
        }
    })
}
