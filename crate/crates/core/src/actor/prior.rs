use serde::{Deserialize, Serialize};

use crate::domain::{Action, RandomStream, StochasticPolicy, Transition};
use crate::{Error, Result};

/// A single source of candidate actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorComponent {
    CurrentPolicy,
    /// The stored action of the transition; never sampled afresh.
    LoggedBehavior,
    Teacher,
}

/// Where a candidate action came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    Logged,
    PolicySample,
    TeacherSample,
}

impl PriorComponent {
    pub fn origin(self) -> Origin {
        match self {
            PriorComponent::CurrentPolicy => Origin::PolicySample,
            PriorComponent::LoggedBehavior => Origin::Logged,
            PriorComponent::Teacher => Origin::TeacherSample,
        }
    }
}

/// A mixture of prior components with weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    components: Vec<(f64, PriorComponent)>,
}

impl PriorSpec {
    pub fn single(component: PriorComponent) -> Self {
        Self {
            components: vec![(1.0, component)],
        }
    }

    pub fn mixture(components: Vec<(f64, PriorComponent)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("empty prior mixture".into()));
        }
        if components.iter().any(|(w, _)| !(0.0..=1.0).contains(w)) {
            return Err(Error::InvalidArgument("prior weights must lie in [0, 1]".into()));
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("prior weights sum to {total}")));
        }
        Ok(Self { components })
    }

    fn two(beta: f64, base: PriorComponent) -> Result<Self> {
        Self::mixture(vec![(1.0 - beta, base), (beta, PriorComponent::Teacher)])
    }

    /// `(1 - beta) * current policy + beta * teacher`.
    pub fn policy_teacher(beta: f64) -> Result<Self> {
        Self::two(beta, PriorComponent::CurrentPolicy)
    }

    /// `(1 - beta) * logged behavior + beta * teacher`.
    pub fn behavior_teacher(beta: f64) -> Result<Self> {
        Self::two(beta, PriorComponent::LoggedBehavior)
    }

    pub fn components(&self) -> &[(f64, PriorComponent)] {
        &self.components
    }

    pub fn weight_of(&self, component: PriorComponent) -> f64 {
        self.components
            .iter()
            .filter(|(_, c)| *c == component)
            .map(|(w, _)| w)
            .sum()
    }

    /// True when the only component with mass is the logged action, which
    /// then stands in alone with unit mass.
    pub fn is_logged_only(&self) -> bool {
        self.components
            .iter()
            .all(|(w, c)| *w == 0.0 || *c == PriorComponent::LoggedBehavior)
    }

    pub fn uses(&self, component: PriorComponent) -> bool {
        self.components.iter().any(|(w, c)| *w > 0.0 && *c == component)
    }

    fn pick(&self, u: f64) -> PriorComponent {
        let mut acc = 0.0;
        let mut last = self.components[0].1;
        for (w, c) in &self.components {
            if *w == 0.0 {
                continue;
            }
            acc += w;
            last = *c;
            if u < acc {
                return *c;
            }
        }
        last
    }
}

/// Draws `n` candidate actions for one transition. Component choice uses
/// `components`, fresh samples use `samples`, so a mixture whose extra
/// components carry zero weight reproduces the single-component draws.
pub fn draw_prior_actions<P, T>(
    prior: &PriorSpec,
    transition: &Transition,
    policy: &P,
    teacher: Option<&T>,
    n: usize,
    components: &mut RandomStream,
    samples: &mut RandomStream,
) -> Result<Vec<(Action, Origin)>>
where
    P: StochasticPolicy + ?Sized,
    T: StochasticPolicy + ?Sized,
{
    if n == 0 {
        return Err(Error::InvalidArgument("at least one prior sample is required".into()));
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let component = prior.pick(components.uniform());
        let action = match component {
            PriorComponent::CurrentPolicy => policy.sample(&transition.state, samples),
            PriorComponent::LoggedBehavior => transition.action.clone(),
            PriorComponent::Teacher => teacher
                .ok_or_else(|| Error::InvalidArgument("prior needs a teacher".into()))?
                .sample(&transition.state, samples),
        };
        out.push((action, component.origin()));
    }
    Ok(out)
}
