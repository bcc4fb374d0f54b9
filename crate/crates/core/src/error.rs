use thiserror::Error;

use crate::vec2::Vec2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("evaluation at singular point {index} located at ({}, {})", .position.x, .position.y)]
    SingularPoint { index: usize, position: Vec2 },
    #[error("accuracy error: {0}")]
    Accuracy(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("regularity error: {0}")]
    Regularity(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("graph validity violated: |k w| = {0}")]
    GraphValidity(f64),
    #[error("curve touching singular point {0}")]
    Degeneracy(usize),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
