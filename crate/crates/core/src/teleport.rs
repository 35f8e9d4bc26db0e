//! Logical-level injection of the gate `U = diag(1, ω)` from copies of the
//! resource state `cos(2π/3)|0⟩ + i sin(2π/3)|1⟩`, with `ω = e^{2πi/3}`.
//!
//! The protocol is checked twice: symbolically over ℚ(ω), with the input
//! amplitudes `a`, `b` kept as formal variables, and numerically by sampling.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::Rational64;
use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;

use crate::C64;

/// `re + im·ω` with rational parts, `ω² = -1 - ω`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cyclo {
    pub re: Rational64,
    pub om: Rational64,
}

impl Cyclo {
    pub fn new(re: (i64, i64), om: (i64, i64)) -> Self {
        Self {
            re: Rational64::new(re.0, re.1),
            om: Rational64::new(om.0, om.1),
        }
    }

    pub fn int(n: i64) -> Self {
        Self {
            re: Rational64::from_integer(n),
            om: Rational64::zero(),
        }
    }

    pub fn omega() -> Self {
        Self {
            re: Rational64::zero(),
            om: Rational64::one(),
        }
    }

    /// Complex conjugate: `ω̄ = ω² = -1 - ω`.
    pub fn conj(self) -> Self {
        Self {
            re: self.re - self.om,
            om: -self.om,
        }
    }

    pub fn to_c64(self) -> C64 {
        let f = |r: Rational64| *r.numer() as f64 / *r.denom() as f64;
        let w = C64::new(-0.5, 3f64.sqrt() / 2.0);
        C64::new(f(self.re), 0.0) + w * f(self.om)
    }
}

impl Zero for Cyclo {
    fn zero() -> Self {
        Self::int(0)
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.om.is_zero()
    }
}

impl Add for Cyclo {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            re: self.re + o.re,
            om: self.om + o.om,
        }
    }
}

impl Sub for Cyclo {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            re: self.re - o.re,
            om: self.om - o.om,
        }
    }
}

impl Neg for Cyclo {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            re: -self.re,
            om: -self.om,
        }
    }
}

impl Mul for Cyclo {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let bd = self.om * o.om;
        Self {
            re: self.re * o.re - bd,
            om: self.re * o.om + self.om * o.re - bd,
        }
    }
}

impl fmt::Display for Cyclo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} + {}ω)", self.re, self.om)
    }
}

/// Amplitude linear in the formal input amplitudes: `ca·a + cb·b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lin {
    pub ca: Cyclo,
    pub cb: Cyclo,
}

impl Lin {
    pub fn zero() -> Self {
        Self {
            ca: Cyclo::zero(),
            cb: Cyclo::zero(),
        }
    }
    pub fn a(c: Cyclo) -> Self {
        Self {
            ca: c,
            cb: Cyclo::zero(),
        }
    }
    pub fn b(c: Cyclo) -> Self {
        Self {
            ca: Cyclo::zero(),
            cb: c,
        }
    }
    fn scale(self, c: Cyclo) -> Self {
        Self {
            ca: self.ca * c,
            cb: self.cb * c,
        }
    }
}

impl fmt::Display for Lin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}a + {}b", self.ca, self.cb)
    }
}

/// Two-qubit state `(computational, ancilla)` indexed by `2·c + a`.
pub type SymState = [Lin; 4];

/// Resource state `cos(2π/3)|0⟩ + i sin(2π/3)|1⟩ = -½|0⟩ + (½ + ω)|1⟩`.
pub fn resource_state() -> [Cyclo; 2] {
    [Cyclo::new((-1, 2), (0, 1)), Cyclo::new((1, 2), (1, 1))]
}

/// `√2 · H` applied to a one-qubit vector.
fn hadamard_sqrt2(v: [Cyclo; 2]) -> [Cyclo; 2] {
    [v[0] + v[1], v[0] - v[1]]
}

#[derive(Debug, Clone, Serialize)]
pub struct SymbolicTrace {
    /// `√2·H|ψ⟩` written as `phase · (1, ω)`; the phase found.
    pub hadamard_phase: String,
    pub psi1_plus: Vec<String>,
    pub psi1_minus: Vec<String>,
    pub psi2_plus: Vec<String>,
    pub psi2_minus: Vec<String>,
    /// Whether every intermediate state equals its closed form exactly.
    pub exact: bool,
}

fn render(s: &SymState) -> Vec<String> {
    ["00", "01", "10", "11"]
        .iter()
        .zip(s)
        .map(|(k, l)| format!("|{k}⟩: {l}"))
        .collect()
}

fn cnot(s: &SymState) -> SymState {
    [s[0], s[1], s[3], s[2]]
}

fn parity_project(s: &SymState, even: bool) -> SymState {
    let mut out = *s;
    for (i, x) in out.iter_mut().enumerate() {
        let odd = ((i >> 1) ^ i) & 1 == 1;
        if odd == even {
            *x = Lin::zero();
        }
    }
    out
}

/// Runs steps 1 to 4 over ℚ(ω) and compares each state with its closed form.
pub fn symbolic_trace() -> SymbolicTrace {
    let w = Cyclo::omega();
    let one = Cyclo::int(1);
    let h = hadamard_sqrt2(resource_state());
    // √2·H|ψ⟩ = ω(|0⟩ + ω|1⟩): strip the phase ω.
    let phase = h[0];
    let stripped = [h[0] * phase.conj(), h[1] * phase.conj()];
    let mut exact = phase == w && stripped == [one, w];

    let psi0: SymState = [Lin::a(one), Lin::a(w), Lin::b(one), Lin::b(w)];
    let p_plus = parity_project(&psi0, true);
    let p_minus = parity_project(&psi0, false);
    exact &= p_plus == [Lin::a(one), Lin::zero(), Lin::zero(), Lin::b(w)];
    exact &= p_minus == [Lin::zero(), Lin::a(w), Lin::b(one), Lin::zero()];
    let q_plus = cnot(&p_plus);
    let q_minus = cnot(&p_minus);
    // (a|0⟩ + bω|1⟩)|0⟩ and (aω|0⟩ + b|1⟩)|1⟩.
    exact &= q_plus == [Lin::a(one), Lin::zero(), Lin::b(w), Lin::zero()];
    exact &= q_minus == [Lin::zero(), Lin::a(w), Lin::zero(), Lin::b(one)];
    // Up to the phase ω, the minus branch applies diag(1, ω̄).
    exact &=
        q_minus[1].scale(w.conj()) == Lin::a(one) && q_minus[3].scale(w.conj()) == Lin::b(w.conj());

    SymbolicTrace {
        hadamard_phase: phase.to_string(),
        psi1_plus: render(&p_plus),
        psi1_minus: render(&p_minus),
        psi2_plus: render(&q_plus),
        psi2_minus: render(&q_minus),
        exact,
    }
}

pub type Mat2 = [[C64; 2]; 2];

pub fn gate_u() -> Mat2 {
    let w = Cyclo::omega().to_c64();
    [[C64::new(1.0, 0.0), C64::zero()], [C64::zero(), w]]
}

fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut m = [[C64::zero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    m
}

fn dagger(a: &Mat2) -> Mat2 {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

/// Whether `m` is a nonzero multiple of one of `I, X, Y, Z` by a unit phase.
fn is_pauli_up_to_phase(m: &Mat2, tol: f64) -> bool {
    let i = C64::new(0.0, 1.0);
    let o = C64::new(1.0, 0.0);
    let z = C64::zero();
    let paulis: [Mat2; 4] = [
        [[o, z], [z, o]],
        [[z, o], [o, z]],
        [[z, -i], [i, z]],
        [[o, z], [z, -o]],
    ];
    paulis.iter().any(|p| {
        // The phase is read off the entry with the largest modulus in p.
        let (r, c) = if p[0][0].norm() > 0.5 { (0, 0) } else { (0, 1) };
        let ph = m[r][c] / p[r][c];
        (ph.norm() - 1.0).abs() < tol
            && (0..2).all(|a| (0..2).all(|b| (m[a][b] - ph * p[a][b]).norm() < tol))
    })
}

/// A single-qubit unitary is Clifford iff it maps `X` and `Z` to Paulis up to phase.
pub fn is_clifford(u: &Mat2) -> bool {
    let o = C64::new(1.0, 0.0);
    let z = C64::zero();
    let x: Mat2 = [[z, o], [o, z]];
    let zz: Mat2 = [[o, z], [z, -o]];
    [x, zz]
        .iter()
        .all(|p| is_pauli_up_to_phase(&mul(&mul(u, p), &dagger(u)), 1e-12))
}

/// Probability that a `±1` walk on ℤ₃ started at 0 has not reached 1 after
/// `n` steps, for `n = 0..len`.
pub fn walk_tail(len: usize) -> Vec<f64> {
    let mut dist = [1.0, 0.0, 0.0];
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(dist[0] + dist[2]);
        let mut next = [0.0; 3];
        for k in [0usize, 2] {
            next[(k + 1) % 3] += dist[k] / 2.0;
            next[(k + 2) % 3] += dist[k] / 2.0;
        }
        next[1] = 0.0;
        dist = next;
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct TeleportStats {
    pub trials: usize,
    /// Fraction of `+1` outcomes over all attempts.
    pub plus_fraction: f64,
    pub attempts: usize,
    /// `(n, observed count with N > n, expected count, sigma)`.
    pub tail: Vec<(usize, usize, f64, f64)>,
    pub max_tail_z: f64,
    /// Smallest fidelity of the final state with `U|φ⟩`.
    pub min_fidelity: f64,
    pub gate_is_clifford: bool,
    pub symbolic: SymbolicTrace,
}

/// One injection attempt on `φ` (numerically). Returns the outcome and the
/// computational qubit afterwards.
pub fn inject<R: Rng>(phi: [C64; 2], rng: &mut R) -> (bool, [C64; 2]) {
    let r = resource_state();
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    let anc = [(r[0] + r[1]).to_c64() * s2, (r[0] - r[1]).to_c64() * s2];
    let psi0 = [
        phi[0] * anc[0],
        phi[0] * anc[1],
        phi[1] * anc[0],
        phi[1] * anc[1],
    ];
    let p_plus = psi0[0].norm_sqr() + psi0[3].norm_sqr();
    let plus = rng.gen::<f64>() < p_plus;
    let (c0, c1) = if plus {
        (psi0[0], psi0[3])
    } else {
        (psi0[1], psi0[2])
    };
    // After the CNOT the ancilla is a product factor; read off the computational qubit.
    let n = (c0.norm_sqr() + c1.norm_sqr()).sqrt();
    (plus, [c0 / n, c1 / n])
}

/// Repeats injection until the net gate is `U`, for `trials` random inputs.
pub fn teleport_stats<R: Rng>(trials: usize, rng: &mut R) -> TeleportStats {
    let u = gate_u();
    let mut plus = 0usize;
    let mut attempts_total = 0usize;
    let mut counts = Vec::new();
    let mut min_fidelity: f64 = 1.0;
    for _ in 0..trials {
        let (t, p): (f64, f64) = (
            rng.gen::<f64>() * std::f64::consts::PI,
            rng.gen::<f64>() * std::f64::consts::TAU,
        );
        let phi = [
            C64::new((t / 2.0).cos(), 0.0),
            C64::from_polar((t / 2.0).sin(), p),
        ];
        let mut cur = phi;
        let mut k = 0i32;
        let mut n = 0usize;
        while k.rem_euclid(3) != 1 {
            let (ok, next) = inject(cur, rng);
            cur = next;
            n += 1;
            plus += ok as usize;
            k += if ok { 1 } else { -1 };
        }
        attempts_total += n;
        counts.push(n);
        let target = [u[0][0] * phi[0], u[1][1] * phi[1]];
        let ov = target[0].conj() * cur[0] + target[1].conj() * cur[1];
        min_fidelity = min_fidelity.min(ov.norm_sqr());
    }
    let oracle = walk_tail(10);
    let mut tail = Vec::new();
    let mut max_tail_z: f64 = 0.0;
    for (n, &p) in oracle.iter().enumerate().skip(1) {
        let obs = counts.iter().filter(|&&c| c > n).count();
        let exp = p * trials as f64;
        let sigma = (trials as f64 * p * (1.0 - p)).sqrt().max(1e-12);
        max_tail_z = max_tail_z.max((obs as f64 - exp).abs() / sigma);
        tail.push((n, obs, exp, sigma));
    }
    TeleportStats {
        trials,
        plus_fraction: plus as f64 / attempts_total as f64,
        attempts: attempts_total,
        tail,
        max_tail_z,
        min_fidelity,
        gate_is_clifford: is_clifford(&u),
        symbolic: symbolic_trace(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cyclotomic_arithmetic() {
        let w = Cyclo::omega();
        assert_eq!(w * w * w, Cyclo::int(1));
        assert_eq!(w + w * w, Cyclo::int(-1));
        assert_eq!(w.conj(), w * w);
        assert!((w.to_c64() - C64::from_polar(1.0, std::f64::consts::TAU / 3.0)).norm() < 1e-15);
    }

    #[test]
    fn resource_state_matches_trig_form() {
        let t = std::f64::consts::TAU / 3.0;
        let r = resource_state();
        assert!((r[0].to_c64() - C64::new(t.cos(), 0.0)).norm() < 1e-15);
        assert!((r[1].to_c64() - C64::new(0.0, t.sin())).norm() < 1e-15);
    }

    #[test]
    fn symbolic_steps_are_exact() {
        assert!(symbolic_trace().exact);
    }

    #[test]
    fn clifford_test_separates_u_from_s() {
        assert!(!is_clifford(&gate_u()));
        let s: Mat2 = [
            [C64::new(1.0, 0.0), C64::zero()],
            [C64::zero(), C64::new(0.0, 1.0)],
        ];
        assert!(is_clifford(&s));
    }

    #[test]
    fn walk_tail_halves() {
        for (n, p) in walk_tail(8).into_iter().enumerate() {
            assert!((p - 0.5f64.powi(n as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn sampled_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = teleport_stats(2000, &mut rng);
        assert!((s.plus_fraction - 0.5).abs() < 0.05);
        assert!(s.min_fidelity > 1.0 - 1e-12);
        assert!(s.max_tail_z < 4.0);
    }
}
