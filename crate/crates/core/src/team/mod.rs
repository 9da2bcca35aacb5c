//! The classifier-plus-allocator team: relaxed mixture forward pass, team
//! cross-entropy with analytic gradients, hard routing and joint training.

mod forward;
mod model;
mod routing;
mod train;

pub use forward::{
    team_forward, team_loss, team_loss_gradients, team_losses, TeamBatch, TeamForward, PROB_FLOOR,
};
pub use model::TeamModel;
pub use routing::{route_dataset, select_member, team_predict, Assignment, MemberKind};
pub use train::{
    accuracy, fit, train_team, train_team_with, EpochRecord, Objective, TeamObjective, TrainConfig,
    TrainTrace, Trained,
};

#[cfg(test)]
mod tests;
