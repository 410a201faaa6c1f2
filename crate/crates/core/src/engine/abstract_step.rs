//! Maximally-parallel multiset rewriting.
//!
//! One step applies, in every compartment at once, a maximal multiset of
//! rule instances: reactants are reserved greedily (uniform random among the
//! applicable rules of highest priority) until nothing more fits, then all
//! reserved instances fire atomically and their products are routed. The
//! classical definition permits any maximal multiset; fixing the greedy
//! uniform strategy makes runs samplable and seed-reproducible.

use std::collections::BTreeMap;

use rand::Rng;

use crate::model::{Compartment, Mixture, Mode, Result, Rule, SystemState, Target};

/// Can `rule` fire in `compartment` as it stands? True iff the membrane is
/// intact, contents cover reactants plus catalysts as a multiset sum, and
/// any `in`-targeted product has at least one intact child to land in.
pub fn applicable(rule: &Rule, compartment: &Compartment) -> bool {
    compartment.membrane_intact && applicable_against(rule, &compartment.contents, compartment)
}

fn applicable_against(rule: &Rule, contents: &Mixture, compartment: &Compartment) -> bool {
    if rule.has_in_target() && !compartment.has_intact_child() {
        return false;
    }
    contents.contains(&rule.reactants.sum(&rule.catalysts))
}

/// One reserved rule instance: which rule, and (for `in` products) which
/// child receives them.
#[derive(Debug, Clone)]
struct Application {
    rule_index: usize,
    in_child: Option<String>,
}

/// Outcome of one maximal step: whether anything fired anywhere, the fired
/// (rule, compartment) instances, and the residual contents each compartment
/// held after reservation but before products arrived. The residuals are
/// what maximality is checked against.
#[derive(Debug, Clone)]
pub struct MaximalStepOutcome {
    pub halted: bool,
    pub applications: Vec<(String, String)>,
    pub residuals: BTreeMap<String, Mixture>,
}

/// Run the greedy reservation loop for one compartment against its
/// pre-step contents. Among applicable rules only those of the highest
/// priority are candidates; the pick among them is uniform.
fn reserve<R: Rng + ?Sized>(
    rules: &[Rule],
    compartment: &Compartment,
    rng: &mut R,
) -> (Vec<Application>, Mixture) {
    let mut residual = compartment.contents.clone();
    let mut apps = Vec::new();
    let intact_children: Vec<&str> = compartment
        .intact_children()
        .map(|c| c.id.as_str())
        .collect();
    loop {
        let mut candidates: Vec<usize> = Vec::new();
        let mut top = i32::MIN;
        for (i, rule) in rules.iter().enumerate() {
            if applicable_against(rule, &residual, compartment) {
                let p = rule.priority();
                if p > top {
                    top = p;
                    candidates.clear();
                }
                if p == top {
                    candidates.push(i);
                }
            }
        }
        if candidates.is_empty() {
            break;
        }
        let rule_index = candidates[rng.random_range(0..candidates.len())];
        for (species, qty) in rules[rule_index].reactants.iter() {
            residual.take(species, qty).expect("reserved within residual");
        }
        let in_child = if rules[rule_index].has_in_target() {
            Some(intact_children[rng.random_range(0..intact_children.len())].to_string())
        } else {
            None
        };
        apps.push(Application { rule_index, in_child });
    }
    (apps, residual)
}

/// Advance the system by one maximally-parallel step. A step on a halted
/// state is the identity (and reports the halt).
pub fn maximal_step<R: Rng + ?Sized>(
    state: &mut SystemState,
    rng: &mut R,
) -> Result<MaximalStepOutcome> {
    state.require_mode(Mode::Abstract)?;

    // reservation pass over pre-step contents, in deterministic walk order
    let order: Vec<String> = state
        .compartments()
        .iter()
        .filter(|c| c.membrane_intact)
        .map(|c| c.id.clone())
        .collect();
    let mut reserved: Vec<(String, Vec<Application>, Mixture)> = Vec::new();
    for id in &order {
        let compartment = state.find_compartment(id).expect("walked id");
        let (apps, residual) = reserve(&state.rules, compartment, rng);
        reserved.push((id.clone(), apps, residual));
    }

    let halted = reserved.iter().all(|(_, apps, _)| apps.is_empty());
    if halted {
        return Ok(MaximalStepOutcome {
            halted: true,
            applications: Vec::new(),
            residuals: reserved.into_iter().map(|(id, _, r)| (id, r)).collect(),
        });
    }

    // parent lookup for `out` routing; MVL roots exit into the environment
    let mut parent_of: BTreeMap<String, String> = BTreeMap::new();
    for mvl in &state.mvls {
        parent_of.insert(mvl.id().to_string(), state.environment.id.clone());
        for c in mvl.root.walk() {
            for child in &c.children {
                parent_of.insert(child.id.clone(), c.id.clone());
            }
        }
    }

    // all reservations fire atomically: first replace every compartment's
    // contents with its residual, only then deliver products (a product may
    // land in a compartment whose residual is assigned later in the walk)
    let mut applications = Vec::new();
    let mut residuals = BTreeMap::new();
    for (id, _, residual) in &reserved {
        residuals.insert(id.clone(), residual.clone());
        state
            .find_compartment_mut(id)
            .expect("walked id")
            .contents = residual.clone();
    }
    for (id, apps, _) in reserved {
        for app in &apps {
            applications.push((state.rules[app.rule_index].name.clone(), id.clone()));
        }
        for app in apps {
            let rule = state.rules[app.rule_index].clone();
            for product in &rule.products {
                let destination = match product.target {
                    Target::Here => id.clone(),
                    Target::Out => parent_of.get(&id).cloned().unwrap_or_else(|| id.clone()),
                    Target::In => app.in_child.clone().expect("reserved with a child"),
                };
                state
                    .find_compartment_mut(&destination)
                    .expect("known destination")
                    .contents
                    .add(&product.species, f64::from(product.stoichiometry));
            }
        }
    }

    Ok(MaximalStepOutcome {
        halted: false,
        applications,
        residuals,
    })
}
