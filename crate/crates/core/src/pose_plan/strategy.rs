use std::collections::BTreeMap;
use std::sync::Arc;

use super::constraint::{frame_from_normal_and_tail, pose_from_constraint};
use super::{PlanError, PlanOptions, PlanPose, PoseConstraintInput, StrategyKind};
use crate::TriangleMesh;

/// Meshes available to a strategy.
#[derive(Debug, Clone, Copy)]
pub struct PlanningScene<'a> {
    pub skin: &'a TriangleMesh,
    pub cortex: Option<&'a TriangleMesh>,
}

impl<'a> PlanningScene<'a> {
    pub fn new(skin: &'a TriangleMesh, cortex: Option<&'a TriangleMesh>) -> Self {
        Self { skin, cortex }
    }

    fn cortex(&self) -> Result<&'a TriangleMesh, PlanError> {
        self.cortex.ok_or(PlanError::MissingMesh("cortex"))
    }
}

/// A coil pose planning heuristic.
pub trait PlanStrategy: Send + Sync {
    /// Registry key, e.g. `closest_skin`.
    fn name(&self) -> &'static str;

    fn kind(&self) -> StrategyKind;

    fn description(&self) -> &'static str;

    fn plan(
        &self,
        scene: &PlanningScene<'_>,
        input: &PoseConstraintInput,
        opts: &PlanOptions,
    ) -> Result<PlanPose, PlanError>;
}

/// Points are placed on the skin; the pose is perpendicular to the scalp.
#[derive(Debug, Clone, Copy, Default)]
pub struct FreeSkin;

/// Orientation tangent to the cortex, center where the cortex normal ray
/// leaves through the skin.
#[derive(Debug, Clone, Copy, Default)]
pub struct RestrictedCortex;

/// Cortex target projected to the closest skin point, oriented by the skin
/// triangle there.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClosestSkin;

impl PlanStrategy for FreeSkin {
    fn name(&self) -> &'static str {
        "free_skin"
    }

    fn kind(&self) -> StrategyKind {
        StrategyKind::FreeSkin
    }

    fn description(&self) -> &'static str {
        "constraint points on the skin; pose perpendicular to the scalp"
    }

    fn plan(&self, scene: &PlanningScene<'_>, input: &PoseConstraintInput, opts: &PlanOptions) -> Result<PlanPose, PlanError> {
        let sp = pose_from_constraint(input, Some(scene.skin), opts)?;
        Ok(PlanPose {
            strategy: StrategyKind::FreeSkin,
            pose: sp.pose,
            source: input.clone(),
            cortex_target: None,
            anchor_triangle: sp.triangle_id,
            skin_collision: false,
        })
    }
}

impl PlanStrategy for RestrictedCortex {
    fn name(&self) -> &'static str {
        "restricted_cortex"
    }

    fn kind(&self) -> StrategyKind {
        StrategyKind::RestrictedCortex
    }

    fn description(&self) -> &'static str {
        "cortex-tangent orientation; center at the skin exit of the cortex normal"
    }

    fn plan(&self, scene: &PlanningScene<'_>, input: &PoseConstraintInput, opts: &PlanOptions) -> Result<PlanPose, PlanError> {
        let cortex = scene.cortex()?;
        let sp = pose_from_constraint(input, Some(cortex), opts)?;
        let target = sp.pose.translation;
        let normal = sp.pose.axis(2);
        let hit = scene
            .skin
            .ray_intersect(&target, &normal)
            .ok_or(PlanError::NoSkinIntersection)?;
        let mut pose = sp.pose;
        pose.translation = hit.point;
        let [hx, hy] = opts.footprint_half_extents_mm;
        let (x, y) = (pose.axis(0), pose.axis(1));
        let skin_collision = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
            .iter()
            .any(|(sx, sy)| scene.skin.contains_point(&(hit.point + x * (sx * hx) + y * (sy * hy))));
        Ok(PlanPose {
            strategy: StrategyKind::RestrictedCortex,
            pose,
            source: input.clone(),
            cortex_target: Some(target),
            anchor_triangle: sp.triangle_id,
            skin_collision,
        })
    }
}

impl PlanStrategy for ClosestSkin {
    fn name(&self) -> &'static str {
        "closest_skin"
    }

    fn kind(&self) -> StrategyKind {
        StrategyKind::ClosestSkin
    }

    fn description(&self) -> &'static str {
        "cortex target projected to the nearest skin point; skin-tangent orientation"
    }

    fn plan(&self, scene: &PlanningScene<'_>, input: &PoseConstraintInput, opts: &PlanOptions) -> Result<PlanPose, PlanError> {
        let cortex = scene.cortex()?;
        let sp = pose_from_constraint(input, Some(cortex), opts)?;
        let target = sp.pose.translation;
        let hit = scene.skin.closest_point(&target)?;
        let n = scene.skin.triangle_normal(hit.triangle_id)?;
        let pose = frame_from_normal_and_tail(&n, &sp.pose.axis(1), hit.point)?;
        Ok(PlanPose {
            strategy: StrategyKind::ClosestSkin,
            pose,
            source: input.clone(),
            cortex_target: Some(target),
            anchor_triangle: Some(hit.triangle_id),
            skin_collision: false,
        })
    }
}

pub fn free_skin_pose(skin: &TriangleMesh, input: &PoseConstraintInput, opts: &PlanOptions) -> Result<PlanPose, PlanError> {
    FreeSkin.plan(&PlanningScene::new(skin, None), input, opts)
}

pub fn restricted_cortex_pose(
    cortex: &TriangleMesh,
    skin: &TriangleMesh,
    input: &PoseConstraintInput,
    opts: &PlanOptions,
) -> Result<PlanPose, PlanError> {
    RestrictedCortex.plan(&PlanningScene::new(skin, Some(cortex)), input, opts)
}

pub fn closest_skin_pose(
    cortex: &TriangleMesh,
    skin: &TriangleMesh,
    input: &PoseConstraintInput,
    opts: &PlanOptions,
) -> Result<PlanPose, PlanError> {
    ClosestSkin.plan(&PlanningScene::new(skin, Some(cortex)), input, opts)
}

/// Name-keyed planning strategies.
#[derive(Clone, Default)]
pub struct StrategyRegistry {
    strategies: BTreeMap<String, Arc<dyn PlanStrategy>>,
}

impl StrategyRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry holding the three built-in strategies.
    pub fn with_builtins() -> Self {
        let mut r = Self::new();
        r.register(Arc::new(FreeSkin));
        r.register(Arc::new(RestrictedCortex));
        r.register(Arc::new(ClosestSkin));
        r
    }

    /// Adds or replaces a strategy under its own name.
    pub fn register(&mut self, strategy: Arc<dyn PlanStrategy>) {
        self.strategies.insert(strategy.name().to_string(), strategy);
    }

    /// Lookup is case-insensitive and treats `-` like `_`.
    pub fn get(&self, name: &str) -> Result<Arc<dyn PlanStrategy>, PlanError> {
        let key = name.trim().to_ascii_lowercase().replace('-', "_");
        self.strategies
            .get(&key)
            .cloned()
            .ok_or_else(|| PlanError::UnknownStrategy(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.strategies.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<dyn PlanStrategy>> {
        self.strategies.values()
    }
}

impl std::fmt::Debug for StrategyRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}
