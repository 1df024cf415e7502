use thiserror::Error;

/// Errors surfaced by the inversion pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// The matrix spinor is not invertible at this point; the inversion is
    /// undefined there (|det Ψ| below the relative threshold).
    #[error("singular spinor at {point:?}: rho = {rho:.3e} below threshold {threshold:.3e}")]
    SingularSpinor {
        point: [f64; 4],
        rho: f64,
        threshold: f64,
    },

    /// The two independent inversion routes disagree beyond tolerance.
    /// This is an internal-consistency failure, never averaged away.
    #[error("inversion path disagreement {disagreement:.3e} exceeds {tolerance:.3e} at {point:?}")]
    PathDisagreement {
        point: [f64; 4],
        disagreement: f64,
        tolerance: f64,
    },

    /// eA-slash has support outside the four vector slots of the Γ basis:
    /// the ansatz does not admit a real electromagnetic potential.
    #[error("gamma-basis purity violation {worst:.3e} (slot {slot}) at {point:?}")]
    ConstraintViolation {
        point: [f64; 4],
        worst: f64,
        slot: usize,
    },

    /// A field expected to be a rotor (unimodular, even) is not.
    #[error("non-rotor field: forbidden projection norm {residue:.3e}")]
    NonRotor { residue: f64 },

    #[error("rotor is not unimodular: |R tilde(R) - 1| = {deviation:.3e}")]
    NonUnimodularRotor { deviation: f64 },

    #[error("point {coords:?} outside chart domain: {reason}")]
    DomainViolation { coords: [f64; 4], reason: String },

    #[error("index {index} out of range 0..4")]
    IndexOutOfRange { index: usize },

    #[error("Lorentz parameters not antisymmetric: theta[{i}][{j}] + theta[{j}][{i}] = {deviation:.3e}")]
    NotAntisymmetric { i: usize, j: usize, deviation: f64 },

    /// prop1/prop2 of the compact Lorentz form failed; signals an internal bug.
    #[error("compact Lorentz form internal check failed: prop residual {residual:.3e}")]
    LorentzPropertyViolation { residual: f64 },

    #[error("boost rapidity argument |f| = {f:.6} >= 1 (superluminal)")]
    SuperluminalBoost { f: f64 },

    #[error("arccos argument {arg:.12} exceeds [-1,1] beyond clamp threshold")]
    ArccosDomain { arg: f64 },

    #[error("ODE integration failed at r = {r:.6e}: {reason}")]
    Integration { r: f64, reason: String },

    /// The Riccati variable crossed a pole of the substitution.
    #[error("Riccati pole crossing near r = {r:.6e} (Z = {z:.3e})")]
    PoleCrossing { r: f64, z: f64 },

    #[error("density is not normalizable: {reason}")]
    NotNormalizable { reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty grid")]
    EmptyGrid,
}

pub type Result<T> = std::result::Result<T, Error>;
