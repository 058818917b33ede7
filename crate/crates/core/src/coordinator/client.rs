use std::sync::Arc;

use super::{
    AddOutcome, CompleteOutcome, Coordinator, CoordinatorError, Resource, ResourceId,
    ResourceKind, Stats,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClientError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("unknown resource: {0}")]
    NotFound(String),
    #[error("stale lease: {0}")]
    StaleLease(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("coordinator failure: {0}")]
    Server(String),
    #[error("transport error: {0}")]
    Transport(String),
}

impl From<CoordinatorError> for ClientError {
    fn from(err: CoordinatorError) -> Self {
        let msg = err.to_string();
        match err {
            CoordinatorError::Validation(_) => Self::Validation(msg),
            CoordinatorError::NotFound(_) => Self::NotFound(msg),
            CoordinatorError::StaleLease { .. } => Self::StaleLease(msg),
            CoordinatorError::InvalidState { .. } => Self::InvalidState(msg),
            CoordinatorError::Store(_) => Self::Server(msg),
        }
    }
}

/// What workers see of the coordinator, whether in-process or over HTTP.
pub trait CoordinatorClient: Send + Sync {
    fn add_resource(&self, kind: ResourceKind, payload: &str) -> Result<AddOutcome, ClientError>;

    fn acquire_next(
        &self,
        kind: ResourceKind,
        worker_id: &str,
    ) -> Result<Option<Resource>, ClientError>;

    fn complete(
        &self,
        id: &ResourceId,
        worker_id: &str,
        result: Option<String>,
    ) -> Result<CompleteOutcome, ClientError>;

    fn stats(&self) -> Result<Stats, ClientError>;
}

impl CoordinatorClient for Coordinator {
    fn add_resource(&self, kind: ResourceKind, payload: &str) -> Result<AddOutcome, ClientError> {
        Ok(Coordinator::add_resource(self, kind, payload)?)
    }

    fn acquire_next(
        &self,
        kind: ResourceKind,
        worker_id: &str,
    ) -> Result<Option<Resource>, ClientError> {
        Ok(Coordinator::acquire_next(self, kind, worker_id)?)
    }

    fn complete(
        &self,
        id: &ResourceId,
        worker_id: &str,
        result: Option<String>,
    ) -> Result<CompleteOutcome, ClientError> {
        Ok(Coordinator::complete(self, id, worker_id, result)?)
    }

    fn stats(&self) -> Result<Stats, ClientError> {
        Ok(Coordinator::stats(self))
    }
}

impl<T: CoordinatorClient + ?Sized> CoordinatorClient for Arc<T> {
    fn add_resource(&self, kind: ResourceKind, payload: &str) -> Result<AddOutcome, ClientError> {
        (**self).add_resource(kind, payload)
    }

    fn acquire_next(
        &self,
        kind: ResourceKind,
        worker_id: &str,
    ) -> Result<Option<Resource>, ClientError> {
        (**self).acquire_next(kind, worker_id)
    }

    fn complete(
        &self,
        id: &ResourceId,
        worker_id: &str,
        result: Option<String>,
    ) -> Result<CompleteOutcome, ClientError> {
        (**self).complete(id, worker_id, result)
    }

    fn stats(&self) -> Result<Stats, ClientError> {
        (**self).stats()
    }
}
