use alloc::string::String;

use crate::network::NeuronId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unknown neuron {0}")]
    UnknownNeuron(NeuronId),
    #[error("unknown synapse {0}")]
    UnknownSynapse(usize),
    #[error("activation input must be a non-negative number, got {0}")]
    NegativeSigma(f64),
    #[error("invalid injection {value} on neuron {neuron}")]
    InvalidInjection { neuron: NeuronId, value: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid parameter {key}: {reason}")]
    InvalidParam { key: String, reason: String },
    #[error("competition group is empty")]
    EmptyGroup,
    #[error("word must not be empty")]
    EmptyWord,
    #[error("word {0:?} is already in the lexicon")]
    DuplicateWord(String),
    #[error("unknown word {0:?}")]
    UnknownWord(String),
    #[error("unknown atom {0:?}")]
    UnknownAtom(String),
    #[error("invalid sandglass: {0}")]
    InvalidSandglass(String),
}
