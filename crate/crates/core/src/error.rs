use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid generator set: {0}")]
    Generators(String),

    #[error("invalid group: {0}")]
    Group(String),

    #[error("generators do not generate: element {element} unreachable from the identity")]
    NotGenerated { element: usize },

    #[error("invalid metric: {0}")]
    Metric(String),

    #[error("invalid action: {0}")]
    Action(String),

    #[error("word-ball radius {required} exceeds the configured cap {cap}")]
    BallRadiusOverflow { required: u64, cap: u64 },

    #[error("level metric not stabilized at pair ({x}, {y}): minimum {current} > n_max + 1 = {bound}")]
    LevelNotStabilized { x: usize, y: usize, current: String, bound: u64 },

    #[error("invalid quotient chain: {0}")]
    Chain(String),

    #[error("weight convention violated at index {index}: a_{next} = {got} is not < a_{index} / diam(G_{index}) = {limit}")]
    WeightConvention { index: usize, next: usize, got: String, limit: String },

    #[error("invalid weights: {0}")]
    Weights(String),

    #[error("orbit exceeds cap {cap}: {visited} points visited, frontier of {frontier}")]
    OrbitCap { cap: usize, visited: usize, frontier: usize },

    #[error("moduli are not pairwise coprime: {a} and {b}")]
    NotCoprime { a: u64, b: u64 },

    #[error("scale {got} is below the stabilization threshold {required}")]
    BelowThreshold { got: String, required: String },

    #[error("graph is disconnected: vertices {a} and {b} lie in different components")]
    Disconnected { a: usize, b: usize },

    #[error("spectral computation failed: {0}")]
    Spectral(String),

    #[error("invalid embedding: {0}")]
    Embedding(String),

    #[error("control function is not nondecreasing at grid index {index}")]
    NotMonotone { index: usize },

    #[error("kernel is not of negative type: witness quadratic form {value:e}")]
    NotNegativeType { value: f64, witness: Vec<f64> },

    #[error("p = {0} where p = 2 is required")]
    NotHilbert(f64),

    #[error("slice embedding at level {level} leaves the ball of radius {bound}: norm {norm}")]
    BallRadius { level: usize, norm: f64, bound: f64 },

    #[error("factor {factor} has a distance {got} below the separation a = {a}")]
    BelowSeparation { factor: usize, got: f64, a: f64 },

    #[error("no slice family at level {0} inside the averaging window")]
    MissingSlice(String),

    #[error("invalid family: {0}")]
    Family(String),

    #[error("acting ball is not closed under inverses")]
    BallNotSymmetric,

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
