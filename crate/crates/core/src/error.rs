use thiserror::Error;

/// Errors produced by the reconstruction toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid camera: {0}")]
    InvalidCamera(String),

    #[error("vanishing point estimation failed: {0} (provide direction labels in the instance)")]
    VanishingPointEstimation(String),

    #[error("model construction: {0}")]
    ModelConstruction(String),

    #[error("graph is not connected ({components} components)")]
    Disconnected { components: usize },

    #[error("missing ground-truth label for edge ({i}, {j})")]
    MissingLabel { i: u32, j: u32 },

    #[error("scene generation: {0}")]
    SceneGeneration(String),

    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("infeasible model")]
    Infeasible,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
