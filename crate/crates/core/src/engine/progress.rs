use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::config::{GameConfig, WorldConfig, WorldKind};
use crate::domain::{LevelId, UserId, WorldId};
use crate::store::Keyed;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgressRecord {
    pub user_id: UserId,
    pub completed_levels: BTreeSet<LevelId>,
}

impl Keyed for ProgressRecord {
    fn key(&self) -> String {
        self.user_id.0.clone()
    }
}

impl ProgressRecord {
    pub fn new(user_id: UserId) -> Self {
        ProgressRecord {
            user_id,
            completed_levels: BTreeSet::new(),
        }
    }
}

/// Share of a world's levels not yet completed. A world without levels has
/// no fog.
pub fn fog_fraction(world: &WorldConfig, progress: &ProgressRecord) -> f64 {
    if world.levels.is_empty() {
        return 0.0;
    }
    let done = world
        .levels
        .iter()
        .filter(|l| progress.completed_levels.contains(&l.id))
        .count();
    1.0 - done as f64 / world.levels.len() as f64
}

pub fn world_complete(world: &WorldConfig, progress: &ProgressRecord) -> bool {
    world
        .levels
        .iter()
        .all(|l| progress.completed_levels.contains(&l.id))
}

pub fn world_unlocked(config: &GameConfig, progress: &ProgressRecord, world: &WorldConfig) -> bool {
    match &world.unlock_requires {
        None => true,
        Some(required) => config
            .world(required)
            .is_some_and(|w| world_complete(w, progress)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressDelta {
    pub level_id: LevelId,
    pub world_id: WorldId,
    /// False when the level had been completed before.
    pub newly_completed: bool,
    pub fog_fraction: f64,
    pub unlocked_worlds: Vec<WorldId>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelView {
    pub id: LevelId,
    pub title_key: Option<String>,
    pub rounds: usize,
    pub completed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorldView {
    pub id: WorldId,
    pub title_key: String,
    pub theme: String,
    pub kind: WorldKind,
    pub unlocked: bool,
    pub unlock_requires: Option<WorldId>,
    pub fog_fraction: f64,
    pub levels: Vec<LevelView>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProgressionView {
    pub worlds: Vec<WorldView>,
}

impl ProgressionView {
    pub fn build(config: &GameConfig, progress: &ProgressRecord) -> Self {
        let worlds = config
            .worlds
            .iter()
            .map(|w| WorldView {
                id: w.id.clone(),
                title_key: w.title_key.clone(),
                theme: w.theme.clone(),
                kind: w.kind,
                unlocked: world_unlocked(config, progress, w),
                unlock_requires: w.unlock_requires.clone(),
                fog_fraction: fog_fraction(w, progress),
                levels: w
                    .levels
                    .iter()
                    .map(|l| LevelView {
                        id: l.id.clone(),
                        title_key: l.title_key.clone(),
                        rounds: l.rounds.len(),
                        completed: progress.completed_levels.contains(&l.id),
                    })
                    .collect(),
            })
            .collect();
        ProgressionView { worlds }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::LevelConfig;
    use crate::domain::{FallacyLabel, RoundId};

    fn world(levels: usize) -> WorldConfig {
        WorldConfig {
            id: WorldId::new("w"),
            title_key: "w".into(),
            theme: "t".into(),
            kind: WorldKind::Campaign,
            levels: (0..levels)
                .map(|i| LevelConfig {
                    id: LevelId::new(format!("l{i}")),
                    title_key: None,
                    rounds: vec![RoundId::new("r")],
                    fallacy_subset: vec![FallacyLabel::AdHominem],
                })
                .collect(),
            unlock_requires: None,
        }
    }

    #[test]
    fn fog_clears_in_proportion() {
        let w = world(4);
        let mut p = ProgressRecord::new(UserId::new("u"));
        assert_eq!(fog_fraction(&w, &p), 1.0);
        p.completed_levels.insert(LevelId::new("l0"));
        p.completed_levels.insert(LevelId::new("l3"));
        assert_eq!(fog_fraction(&w, &p), 0.5);
        assert!(!world_complete(&w, &p));
        p.completed_levels.insert(LevelId::new("l1"));
        p.completed_levels.insert(LevelId::new("l2"));
        assert_eq!(fog_fraction(&w, &p), 0.0);
        assert!(world_complete(&w, &p));
        assert_eq!(fog_fraction(&world(0), &p), 0.0);
    }
}
