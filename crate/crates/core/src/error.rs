use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("schedule does not fit the circuit: {0}")]
    ScheduleMismatch(String),
    #[error(
        "choice {choice} at step {step} is out of range for control `{control}` (arity {arity})"
    )]
    ChoiceOutOfRange {
        control: String,
        step: usize,
        choice: usize,
        arity: usize,
    },
    #[error("clock `{0}` is free and needs explicit latch bits")]
    UnresolvedFreeClock(String),
    #[error("invalid referring form: {0}")]
    InvalidForm(String),
    #[error("budget exceeded: {required} evaluations needed, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },
    #[error("the set of referring forms is empty")]
    EmptyFormSet,
    #[error("the alphabet must have at least one symbol")]
    EmptyAlphabet,
    #[error("input stream has {inputs} steps but the schedule horizon is {horizon}")]
    LengthMismatch { inputs: usize, horizon: usize },
    #[error("{requested} flip-flops requested, the configured maximum is {max}")]
    TooManyFlipFlops { requested: usize, max: usize },
}
