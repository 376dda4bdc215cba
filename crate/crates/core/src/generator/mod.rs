//! Recurrent gate-sequence policy conditioned on an operator support, trained
//! with REINFORCE and a replay-imitation phase.

mod checkpoint;
mod policy;
mod replay;
mod rnn;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, write_atomic, Checkpoint, CHECKPOINT_VERSION};
pub use policy::{
    actions_to_circuit, apply_gradient, circuit_to_actions, encode_layer, encode_support, greedy_circuit,
    layer_log_probs, policy_gradient, policy_gradient_update, replay_nll, reward, sample_circuit, start_token,
    supervised_update, surrogate_loss, PolicySample, UpdateOutcome, GRAD_CLIP, SUPERVISED_BATCH,
};
pub use replay::{Actions, ReplayBuffer, ReplayEntry};
pub use rnn::{
    backward, input_vector, log_softmax, rnn_step, softmax, unroll, RnnParams, RnnState, Unrolled, DICT_SIZE,
    TENSOR_NAMES,
};
pub use train::{train, LogRow, TrainConfig, TrainOptions, TrainOutcome, Trainer};
