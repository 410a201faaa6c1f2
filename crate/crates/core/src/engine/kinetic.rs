//! Continuous-time kinetics: Fickian membrane diffusion, mass-action and
//! Michaelis–Menten reactions, and gas-driven swelling with bursting.
//!
//! Units: with volumes in fL (= µm³), amounts in amol and concentrations in
//! mM (= amol/fL), a flux J = P·A·Δc with P in µm/s and A in µm² comes out
//! directly in amol/s — no conversion constants anywhere.

use crate::model::{
    set_depths, Compartment, Event, EventKind, Mixture, Mode, Mvl, PermClass, Result, SystemState,
    Target,
};

/// How membrane diffusion is integrated over a step.
///
/// Forward Euler is the plain first-order scheme; it is accurate for
/// dt ≪ 1/k but can overshoot (and oscillate) when a fast-permeating species
/// meets a tiny compartment. The analytic-pairwise solver applies the exact
/// two-box exponential relaxation to each membrane in isolation, which is
/// unconditionally stable at any dt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionSolver {
    #[default]
    ForwardEuler,
    AnalyticPairwise,
}

impl DiffusionSolver {
    pub fn name(self) -> &'static str {
        match self {
            DiffusionSolver::ForwardEuler => "euler",
            DiffusionSolver::AnalyticPairwise => "analytic",
        }
    }

    pub fn parse(s: &str) -> Option<DiffusionSolver> {
        match s {
            "euler" | "forward_euler" => Some(DiffusionSolver::ForwardEuler),
            "analytic" | "analytic_pairwise" => Some(DiffusionSolver::AnalyticPairwise),
            _ => None,
        }
    }
}

/// Effective permeability (µm/s) of `membrane` for one species: a channel
/// override on that membrane beats the species override, which beats the
/// class default; an unexpired electroporation pore multiplies the result
/// for everything but particles.
pub fn effective_permeability(state: &SystemState, membrane: &Compartment, species: &str) -> f64 {
    let Some(sp) = state.species.get(species) else {
        return 0.0;
    };
    let base = membrane
        .channels
        .get(species)
        .copied()
        .or(sp.permeability_override)
        .unwrap_or_else(|| state.permeability.default_permeability(sp.perm_class));
    match membrane.pore {
        Some(pore) if state.clock < pore.until && sp.perm_class != PermClass::Particle => {
            base * pore.boost
        }
        _ => base,
    }
}

/// (parent id, child id) for every intact membrane, environment↔root first,
/// then parent↔child in tree order. The membrane belongs to the child.
fn membrane_pairs(state: &SystemState) -> Vec<(String, String)> {
    let mut pairs = Vec::new();
    for mvl in &state.mvls {
        if !mvl.root.membrane_intact {
            continue;
        }
        pairs.push((state.environment.id.clone(), mvl.root.id.clone()));
        fn rec(c: &Compartment, pairs: &mut Vec<(String, String)>) {
            for child in c.intact_children() {
                pairs.push((c.id.clone(), child.id.clone()));
                rec(child, pairs);
            }
        }
        rec(&mvl.root, &mut pairs);
    }
    pairs
}

fn relative_activity(amount: f64, total: f64) -> f64 {
    amount.abs() / total.abs().max(1.0)
}

/// Move `amount` of `species` from donor to acceptor, clamping at what the
/// donor holds so totals are preserved exactly. Returns the clamped amount.
fn transfer(
    state: &mut SystemState,
    donor: &str,
    acceptor: &str,
    species: &str,
    amount: f64,
    log: &mut Vec<String>,
) -> f64 {
    let donor_c = state.find_compartment_mut(donor).expect("known donor");
    let available = donor_c.contents.amount(species);
    let moved = amount.min(available);
    if moved < amount {
        log.push(format!(
            "diffusion of {species} {donor}->{acceptor} clamped from {amount} to {moved} amol"
        ));
    }
    if moved <= 0.0 {
        return 0.0;
    }
    donor_c.contents.take(species, moved).expect("clamped");
    state
        .find_compartment_mut(acceptor)
        .expect("known acceptor")
        .contents
        .add(species, moved);
    moved
}

/// One diffusion step over every intact membrane and permeant species.
/// Returns the largest relative amount moved (activity), for quiescence
/// detection. Total amounts per species are preserved.
pub fn diffusion_step(
    state: &mut SystemState,
    dt: f64,
    solver: DiffusionSolver,
    log: &mut Vec<String>,
) -> Result<f64> {
    state.require_mode(Mode::Kinetic)?;
    let totals = state.species_totals();
    let pairs = membrane_pairs(state);
    let species: Vec<String> = state.species.names().map(String::from).collect();
    let mut activity: f64 = 0.0;

    match solver {
        DiffusionSolver::ForwardEuler => {
            // Jacobi: all fluxes from the pre-step snapshot, then applied
            let mut moves: Vec<(String, String, String, f64)> = Vec::new();
            for (parent_id, child_id) in &pairs {
                let parent = state.find_compartment(parent_id).expect("pair member");
                let child = state.find_compartment(child_id).expect("pair member");
                let area = child.surface_area();
                for sp in &species {
                    let p = effective_permeability(state, child, sp);
                    if p <= 0.0 {
                        continue;
                    }
                    let gradient = parent.concentration(sp) - child.concentration(sp);
                    let flux = p * area * gradient * dt; // amol into child
                    if flux > 0.0 {
                        moves.push((parent_id.clone(), child_id.clone(), sp.clone(), flux));
                    } else if flux < 0.0 {
                        moves.push((child_id.clone(), parent_id.clone(), sp.clone(), -flux));
                    }
                }
            }
            for (donor, acceptor, sp, amount) in moves {
                let moved = transfer(state, &donor, &acceptor, &sp, amount, log);
                activity = activity.max(relative_activity(moved, totals.amount(&sp)));
            }
        }
        DiffusionSolver::AnalyticPairwise => {
            // exact two-box relaxation per membrane, applied sequentially;
            // never overshoots, so it is stable at any dt
            for (parent_id, child_id) in &pairs {
                for sp in &species {
                    let parent = state.find_compartment(parent_id).expect("pair member");
                    let child = state.find_compartment(child_id).expect("pair member");
                    let p = effective_permeability(state, child, sp);
                    if p <= 0.0 {
                        continue;
                    }
                    let area = child.surface_area();
                    let inv_vols = if parent.volume.is_finite() {
                        1.0 / parent.volume + 1.0 / child.volume
                    } else {
                        1.0 / child.volume
                    };
                    let k = p * area * inv_vols;
                    let gradient = parent.concentration(sp) - child.concentration(sp);
                    let tau = gradient * (-(-k * dt).exp_m1()) / inv_vols; // amol into child
                    let moved = if tau > 0.0 {
                        transfer(state, parent_id, child_id, sp, tau, log)
                    } else if tau < 0.0 {
                        transfer(state, child_id, parent_id, sp, -tau, log)
                    } else {
                        0.0
                    };
                    activity = activity.max(relative_activity(moved, totals.amount(sp)));
                }
            }
        }
    }
    Ok(activity)
}

/// One reaction step: every kinetic rule fires in every intact, finite
/// compartment where its rate is nonzero. Rates use pre-step concentrations
/// (Jacobi); per compartment all rates are scaled down proportionally when
/// a species would otherwise go negative. Gas-class products additionally
/// increment the producing compartment's gas ledger.
pub fn reaction_step(state: &mut SystemState, dt: f64, log: &mut Vec<String>) -> Result<f64> {
    state.require_mode(Mode::Kinetic)?;
    let totals = state.species_totals();
    let gas_species: Vec<String> = state
        .species
        .iter()
        .filter(|s| s.perm_class == PermClass::Gas)
        .map(|s| s.name.clone())
        .collect();

    // parent lookup for `out` routing
    let mut parent_of: std::collections::BTreeMap<String, String> = Default::default();
    for mvl in &state.mvls {
        parent_of.insert(mvl.id().to_string(), state.environment.id.clone());
        for c in mvl.root.walk() {
            for child in &c.children {
                parent_of.insert(child.id.clone(), c.id.clone());
            }
        }
    }

    struct Delta {
        compartment: String,
        takes: Vec<(String, f64)>,
        adds: Vec<(String, String, f64)>, // (destination, species, amount)
        gas: f64,
    }
    let mut deltas: Vec<Delta> = Vec::new();

    for compartment in state.compartments() {
        if !compartment.membrane_intact || !compartment.volume.is_finite() {
            continue;
        }
        let volume = compartment.volume;
        let conc = |sp: &str| compartment.contents.amount(sp) / volume;

        // rule extents in amol of rule instances
        let mut extents: Vec<(usize, f64)> = Vec::new();
        for (i, rule) in state.rules.iter().enumerate() {
            if !rule.is_kinetic() {
                continue;
            }
            if rule.has_in_target() && !compartment.has_intact_child() {
                continue;
            }
            // declared catalysts must be present at all
            if rule
                .catalysts
                .species()
                .any(|c| compartment.contents.amount(c) <= 0.0)
            {
                continue;
            }
            let v = match &rule.kinetics {
                crate::model::Kinetics::MassAction { k } => {
                    let mut v = *k;
                    for (sp, stoich) in rule.reactants.iter() {
                        v *= conc(sp).powi(stoich as i32);
                    }
                    v
                }
                crate::model::Kinetics::MichaelisMenten { kcat, km, enzyme } => {
                    let s = rule.substrate().map(&conc).unwrap_or(0.0);
                    let e = conc(enzyme);
                    if s <= 0.0 || e <= 0.0 {
                        0.0
                    } else {
                        kcat * e * s / (km + s)
                    }
                }
                crate::model::Kinetics::Abstract { .. } => unreachable!("filtered"),
            };
            if v > 0.0 {
                extents.push((i, v * volume * dt));
            }
        }
        if extents.is_empty() {
            continue;
        }

        // proportional clamp so no species is driven negative
        let mut scale = 1.0_f64;
        for sp in state.species.names() {
            let consumption: f64 = extents
                .iter()
                .map(|(i, ext)| ext * state.rules[*i].reactants.amount(sp))
                .sum();
            let available = compartment.contents.amount(sp);
            if consumption > available {
                scale = scale.min(available / consumption);
            }
        }
        if scale < 1.0 {
            log.push(format!(
                "reaction rates in '{}' scaled by {scale:.3e} to keep amounts nonnegative",
                compartment.id
            ));
        }

        let children: Vec<String> = compartment.intact_children().map(|c| c.id.clone()).collect();
        let mut delta = Delta {
            compartment: compartment.id.clone(),
            takes: Vec::new(),
            adds: Vec::new(),
            gas: 0.0,
        };
        for (i, raw_extent) in extents {
            let extent = raw_extent * scale;
            let rule = &state.rules[i];
            for (sp, stoich) in rule.reactants.iter() {
                delta.takes.push((sp.to_string(), stoich * extent));
            }
            for product in &rule.products {
                let amount = f64::from(product.stoichiometry) * extent;
                if gas_species.iter().any(|g| g == &product.species) {
                    delta.gas += amount;
                }
                match product.target {
                    Target::Here => {
                        delta.adds.push((compartment.id.clone(), product.species.clone(), amount))
                    }
                    Target::Out => {
                        let dest = parent_of
                            .get(&compartment.id)
                            .cloned()
                            .unwrap_or_else(|| compartment.id.clone());
                        delta.adds.push((dest, product.species.clone(), amount));
                    }
                    Target::In => {
                        let share = amount / children.len() as f64;
                        for child in &children {
                            delta.adds.push((child.clone(), product.species.clone(), share));
                        }
                    }
                }
            }
        }
        deltas.push(delta);
    }

    let mut activity: f64 = 0.0;
    for delta in deltas {
        let comp = state
            .find_compartment_mut(&delta.compartment)
            .expect("still present");
        for (sp, amount) in &delta.takes {
            let available = comp.contents.amount(sp);
            comp.contents.take(sp, amount.min(available)).expect("clamped");
            activity = activity.max(relative_activity(*amount, totals.amount(sp)));
        }
        comp.gas_accumulated += delta.gas;
        for (dest, sp, amount) in &delta.adds {
            state
                .find_compartment_mut(dest)
                .expect("known destination")
                .contents
                .add(sp, *amount);
            activity = activity.max(relative_activity(*amount, totals.amount(sp)));
        }
    }
    Ok(activity)
}

fn burst_into(parent_contents: &mut Mixture, parent_gas: &mut f64, child: &mut Compartment) -> Mixture {
    let payload = child.contents.clear();
    parent_contents.merge(&payload);
    *parent_gas += child.gas_accumulated;
    child.gas_accumulated = 0.0;
    child.membrane_intact = false;
    payload
}

/// Check every intact compartment's swollen volume against the burst
/// threshold and fire bursts deepest-first, so a child's gas release can
/// cascade into its parent within the same call. A bursting compartment
/// dumps contents and gas into its parent (the environment at the root) and
/// its children are re-parented one level up; a root burst liberates the
/// children as independent MVLs.
pub fn swelling_and_burst(
    state: &mut SystemState,
    burst_volume_ratio: f64,
    gas_molar_volume_factor: f64,
) -> Result<Vec<Event>> {
    state.require_mode(Mode::Kinetic)?;
    let clock = state.clock;
    let mut events = Vec::new();

    let over = |c: &Compartment| -> bool {
        c.membrane_intact
            && c.volume.is_finite()
            && c.effective_volume(gas_molar_volume_factor) / c.volume > burst_volume_ratio
    };

    // inner compartments, deepest level first
    for depth in [3u32, 2u32] {
        for mvl in &mut state.mvls {
            fn sweep(
                node: &mut Compartment,
                depth: u32,
                over: &dyn Fn(&Compartment) -> bool,
                clock: f64,
                events: &mut Vec<Event>,
            ) {
                let mut adopted: Vec<Compartment> = Vec::new();
                let node_depth = node.depth;
                let mut contents = std::mem::take(&mut node.contents);
                let mut gas = node.gas_accumulated;
                for child in &mut node.children {
                    if child.depth == depth && over(child) {
                        let payload = burst_into(&mut contents, &mut gas, child);
                        events.push(
                            Event::new(clock, EventKind::Burst, child.id.clone())
                                .with_payload(payload),
                        );
                        for mut grand in child.children.drain(..) {
                            set_depths(&mut grand, node_depth + 1).expect("moving up");
                            adopted.push(grand);
                        }
                    } else {
                        sweep(child, depth, over, clock, events);
                    }
                }
                node.contents = contents;
                node.gas_accumulated = gas;
                node.children.extend(adopted);
            }
            sweep(&mut mvl.root, depth, &over, clock, &mut events);
        }
    }

    // roots burst into the environment, liberating children as new MVLs
    let mut liberated: Vec<Mvl> = Vec::new();
    let env = &mut state.environment;
    for mvl in &mut state.mvls {
        if over(&mvl.root) {
            let payload = burst_into(&mut env.contents, &mut env.gas_accumulated, &mut mvl.root);
            events.push(
                Event::new(clock, EventKind::Burst, mvl.root.id.clone()).with_payload(payload),
            );
            for mut child in mvl.root.children.drain(..) {
                set_depths(&mut child, 1).expect("moving up");
                liberated.push(Mvl::from_tree(child)?);
            }
        }
    }
    state.mvls.extend(liberated);
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Kinetics, Morphology, Product, Rule, Species, SpeciesTable};

    fn kinetic_state(species: Vec<Species>) -> SystemState {
        let mut table = SpeciesTable::new();
        for s in species {
            table.insert(s).unwrap();
        }
        SystemState::new(Mode::Kinetic, table, 1)
    }

    /// Two equal 100 fL boxes joined by one membrane; the species is ionic
    /// (frozen) until a channel with permeability `p` is inserted on the
    /// child membrane, so the environment plays no part.
    fn two_box(p: f64, c_parent: f64, c_child: f64) -> (SystemState, f64) {
        let mut st = kinetic_state(vec![Species::new("ion", PermClass::Ionic)]);
        let d = (600.0 / std::f64::consts::PI).cbrt(); // volume 100 fL
        let mut parent = Compartment::sphere("outer", d).unwrap();
        let mut child = Compartment::sphere("inner", d).unwrap();
        child.channels.insert("ion".into(), p);
        let area = child.surface_area();
        parent.attach_child(child).unwrap();
        parent.contents.set("ion", c_parent * 100.0);
        st.mvls.push(Mvl::new(Morphology::T1a, parent).unwrap());
        if c_child > 0.0 {
            st.find_compartment_mut("inner").unwrap().contents.set("ion", c_child * 100.0);
        }
        let k = p * area * (1.0 / 100.0 + 1.0 / 100.0);
        (st, k)
    }

    #[test]
    fn zero_gradient_means_zero_change() {
        let (mut st, _) = two_box(0.04, 1.0, 1.0);
        let before = st.clone();
        let mut log = Vec::new();
        let act = diffusion_step(&mut st, 0.5, DiffusionSolver::ForwardEuler, &mut log).unwrap();
        assert_eq!(act, 0.0);
        assert_eq!(st, before);
    }

    #[test]
    fn impermeant_species_never_move() {
        let mut st = kinetic_state(vec![Species::new("sucrose", PermClass::Macromolecule)]);
        let mut parent = Compartment::sphere("outer", 20.0).unwrap();
        parent.attach_child(Compartment::sphere("inner", 8.0).unwrap()).unwrap();
        parent.contents.set("sucrose", 500.0);
        st.mvls.push(Mvl::new(Morphology::T1a, parent).unwrap());
        let before = st.clone();
        let mut log = Vec::new();
        for _ in 0..10 {
            diffusion_step(&mut st, 0.1, DiffusionSolver::ForwardEuler, &mut log).unwrap();
        }
        assert_eq!(st, before);
    }

    /// Closed two-box relaxation against the hand-derived exponential:
    /// c_in(t) = c_eq (1 − e^{−kt}) with k = P·A·(1/V₁ + 1/V₂).
    #[test]
    fn two_box_relaxation_matches_closed_form() {
        let (mut st, k) = two_box(0.04, 2.0, 0.0);
        let t_end = 3.0 / k;
        let dt = 1e-3 / k;
        let steps = (t_end / dt).round() as usize;
        let mut log = Vec::new();
        for _ in 0..steps {
            diffusion_step(&mut st, dt, DiffusionSolver::ForwardEuler, &mut log).unwrap();
        }
        let c_in = st.find_compartment("inner").unwrap().concentration("ion");
        let exact = 1.0 * (1.0 - (-3.0_f64).exp());
        let rel = (c_in - exact).abs() / exact;
        assert!(rel < 1e-3, "relative error {rel}");
        assert!(log.is_empty(), "no clamping expected");
    }

    #[test]
    fn euler_error_halves_with_dt() {
        let measure = |dt_factor: f64| -> f64 {
            let (mut st, k) = two_box(0.04, 2.0, 0.0);
            let dt = dt_factor / k;
            let steps = (3.0 / k / dt).round() as usize;
            let mut log = Vec::new();
            for _ in 0..steps {
                diffusion_step(&mut st, dt, DiffusionSolver::ForwardEuler, &mut log).unwrap();
            }
            let c_in = st.find_compartment("inner").unwrap().concentration("ion");
            let exact = 1.0 - (-3.0_f64).exp();
            (c_in - exact).abs() / exact
        };
        let e1 = measure(1e-3);
        let e2 = measure(5e-4);
        let ratio = e2 / e1;
        assert!((0.4..0.6).contains(&ratio), "convergence ratio {ratio}");
    }

    #[test]
    fn analytic_solver_is_exact_on_the_two_box() {
        let (mut st, k) = two_box(0.04, 2.0, 0.0);
        let dt = 0.5 / k; // far beyond Euler's comfort
        let mut log = Vec::new();
        for _ in 0..6 {
            diffusion_step(&mut st, dt, DiffusionSolver::AnalyticPairwise, &mut log).unwrap();
        }
        let c_in = st.find_compartment("inner").unwrap().concentration("ion");
        let exact = 1.0 - (-3.0_f64).exp();
        assert!((c_in - exact).abs() / exact < 1e-12, "{c_in} vs {exact}");
    }

    #[test]
    fn diffusion_conserves_totals() {
        let (mut st, k) = two_box(0.04, 2.0, 0.3);
        let mut log = Vec::new();
        for _ in 0..500 {
            diffusion_step(&mut st, 0.1 / k, DiffusionSolver::ForwardEuler, &mut log).unwrap();
        }
        let total = st.species_total("ion");
        assert!((total - 230.0).abs() < 230.0 * 1e-9, "total {total}");
    }

    #[test]
    fn gradient_is_nonincreasing_per_step() {
        let (mut st, k) = two_box(0.04, 2.0, 0.0);
        let dt = 0.2 / k;
        let mut log = Vec::new();
        let mut last = 2.0_f64;
        for _ in 0..100 {
            diffusion_step(&mut st, dt, DiffusionSolver::ForwardEuler, &mut log).unwrap();
            let outer = st.find_compartment("outer").unwrap().concentration("ion");
            let inner = st.find_compartment("inner").unwrap().concentration("ion");
            let gradient = (outer - inner).abs();
            assert!(gradient <= last + 1e-15, "gradient grew: {last} -> {gradient}");
            last = gradient;
        }
    }

    #[test]
    fn channel_is_local_to_its_membrane() {
        // channel on the inner membrane must not open the outer one
        let mut st = kinetic_state(vec![Species::new("ion", PermClass::Ionic)]);
        let mut outer = Compartment::sphere("outer", 30.0).unwrap();
        let mut inner = Compartment::sphere("inner", 10.0).unwrap();
        inner.channels.insert("ion".into(), 0.5);
        outer.attach_child(inner).unwrap();
        outer.contents.set("ion", 1000.0);
        st.mvls.push(Mvl::new(Morphology::T1a, outer).unwrap());
        st.environment = Compartment::environment_with_volume(1e6).unwrap();
        let mut log = Vec::new();
        for _ in 0..50 {
            diffusion_step(&mut st, 0.01, DiffusionSolver::ForwardEuler, &mut log).unwrap();
        }
        assert!(st.environment.contents.amount("ion") == 0.0, "outer membrane stayed shut");
        assert!(st.find_compartment("inner").unwrap().contents.amount("ion") > 0.0);
    }

    #[test]
    fn michaelis_menten_half_saturation_identity() {
        // [S] = Km gives v = kcat·[E]/2; one tiny step realizes Δn = v·V·dt
        let mut st = kinetic_state(vec![
            Species::new("s", PermClass::Macromolecule),
            Species::new("p", PermClass::Macromolecule),
            Species::new("e", PermClass::Macromolecule),
        ]);
        let d = (600.0 / std::f64::consts::PI).cbrt();
        let mut c = Compartment::sphere("cell", d).unwrap();
        c.contents.set("s", 3.0 * 100.0); // 3 mM = Km
        c.contents.set("e", 0.002 * 100.0); // 2 µM
        st.mvls.push(Mvl::new(Morphology::Plain, c).unwrap());
        st.add_rule(Rule {
            name: "cat".into(),
            reactants: Mixture::of(&[("s", 1.0)]),
            catalysts: Mixture::of(&[("e", 1.0)]),
            products: vec![Product::here("p", 1)],
            kinetics: Kinetics::MichaelisMenten { kcat: 100.0, km: 3.0, enzyme: "e".into() },
        })
        .unwrap();
        let mut log = Vec::new();
        let dt = 1e-6;
        reaction_step(&mut st, dt, &mut log).unwrap();
        let v_expected = 0.5 * 100.0 * 0.002; // mM/s
        let p = st.find_compartment("cell").unwrap().contents.amount("p");
        assert!(
            (p - v_expected * 100.0 * dt).abs() < 1e-12,
            "p = {p}, expected {}",
            v_expected * 100.0 * dt
        );
    }

    #[test]
    fn no_enzyme_means_no_reaction() {
        let mut st = kinetic_state(vec![
            Species::new("s", PermClass::Macromolecule),
            Species::new("p", PermClass::Macromolecule),
            Species::new("e", PermClass::Macromolecule),
        ]);
        let mut c = Compartment::sphere("cell", 10.0).unwrap();
        c.contents.set("s", 50.0);
        st.mvls.push(Mvl::new(Morphology::Plain, c).unwrap());
        st.add_rule(Rule {
            name: "cat".into(),
            reactants: Mixture::of(&[("s", 1.0)]),
            catalysts: Mixture::of(&[("e", 1.0)]),
            products: vec![Product::here("p", 1)],
            kinetics: Kinetics::MichaelisMenten { kcat: 100.0, km: 3.0, enzyme: "e".into() },
        })
        .unwrap();
        let before = st.clone();
        let mut log = Vec::new();
        let act = reaction_step(&mut st, 0.01, &mut log).unwrap();
        assert_eq!(act, 0.0);
        assert_eq!(st, before);
    }

    /// Single-step hand evaluation: urea 100 mM, urease 1 µM, kcat 1e4/s,
    /// Km 3 mM, V = 100 fL, dt = 1e-4 s. v = 1e4·1e-3·100/103 mM/s, so urea
    /// drops to 100 − v·dt ≈ 99.99902913 mM.
    #[test]
    fn urease_single_step_hand_value() {
        let mut st = kinetic_state(vec![
            Species::new("urea", PermClass::SmallPolar),
            Species::new("nh3", PermClass::SmallPolar),
            Species::new("co2", PermClass::Gas),
            Species::new("urease", PermClass::Macromolecule),
        ]);
        let d = (600.0 / std::f64::consts::PI).cbrt();
        let mut c = Compartment::sphere("cell", d).unwrap();
        c.contents.set("urea", 100.0 * 100.0);
        c.contents.set("urease", 1e-3 * 100.0);
        st.mvls.push(Mvl::new(Morphology::Plain, c).unwrap());
        st.add_rule(Rule {
            name: "hydrolysis".into(),
            reactants: Mixture::of(&[("urea", 1.0)]),
            catalysts: Mixture::of(&[("urease", 1.0)]),
            products: vec![Product::here("co2", 1), Product::here("nh3", 2)],
            kinetics: Kinetics::MichaelisMenten { kcat: 1e4, km: 3.0, enzyme: "urease".into() },
        })
        .unwrap();
        let mut log = Vec::new();
        reaction_step(&mut st, 1e-4, &mut log).unwrap();
        let cell = st.find_compartment("cell").unwrap();
        let urea_mm = cell.concentration("urea");
        let v: f64 = 1e4 * 1e-3 * (100.0 / 103.0); // 9.70873786… mM/s
        assert!((v - 9.70873786).abs() < 1e-6);
        assert!((urea_mm - (100.0 - v * 1e-4)).abs() < 1e-9, "urea {urea_mm}");
        assert!((urea_mm - 99.99902913).abs() < 1e-6);
        // stoichiometry: 1 CO₂ + 2 NH₃ per urea, and the gas ledger fills
        assert!((cell.concentration("nh3") - 2.0 * v * 1e-4).abs() < 1e-9);
        assert!((cell.concentration("co2") - v * 1e-4).abs() < 1e-9);
        assert!((cell.gas_accumulated - v * 1e-4 * 100.0).abs() < 1e-9);
    }

    #[test]
    fn rates_clamp_proportionally_instead_of_going_negative() {
        let mut st = kinetic_state(vec![
            Species::new("s", PermClass::Macromolecule),
            Species::new("p", PermClass::Macromolecule),
        ]);
        let mut c = Compartment::sphere("cell", 10.0).unwrap();
        c.contents.set("s", 1.0);
        st.mvls.push(Mvl::new(Morphology::Plain, c).unwrap());
        st.add_rule(Rule {
            name: "fast".into(),
            reactants: Mixture::of(&[("s", 1.0)]),
            catalysts: Mixture::new(),
            products: vec![Product::here("p", 1)],
            kinetics: Kinetics::MassAction { k: 1e9 },
        })
        .unwrap();
        let mut log = Vec::new();
        reaction_step(&mut st, 1.0, &mut log).unwrap();
        let cell = st.find_compartment("cell").unwrap();
        assert!(cell.contents.amount("s") >= 0.0);
        assert!((cell.contents.amount("p") - 1.0).abs() < 1e-9, "all of s converted");
        assert!(!log.is_empty(), "clamp must be logged");
    }

    #[test]
    fn burst_fires_on_the_hand_computed_ratio() {
        // V = 100 fL, factor 0.025 fL/amol, gas 300 amol:
        // effective/initial = 107.5/100 = 1.075 > 1.06 → burst
        let mut st = kinetic_state(vec![Species::new("x", PermClass::Macromolecule)]);
        st.environment = Compartment::environment_with_volume(1e6).unwrap();
        let d = (600.0 / std::f64::consts::PI).cbrt();
        let mut root = Compartment::sphere("m0", d).unwrap();
        root.contents.set("x", 42.0);
        root.gas_accumulated = 300.0;
        st.mvls.push(Mvl::new(Morphology::Plain, root).unwrap());
        let events = swelling_and_burst(&mut st, 1.06, 0.025).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].kind, EventKind::Burst);
        assert_eq!(events[0].compartment_id, "m0");
        assert!(!st.mvls[0].root.membrane_intact);
        assert_eq!(st.environment.contents.amount("x"), 42.0);
        assert_eq!(st.environment.gas_accumulated, 300.0);

        // gas 200 amol → ratio 1.05 < 1.06 → nothing happens
        let mut st2 = kinetic_state(vec![Species::new("x", PermClass::Macromolecule)]);
        let mut root = Compartment::sphere("m0", d).unwrap();
        root.gas_accumulated = 200.0;
        st2.mvls.push(Mvl::new(Morphology::Plain, root).unwrap());
        let events = swelling_and_burst(&mut st2, 1.06, 0.025).unwrap();
        assert!(events.is_empty());
        assert!(st2.mvls[0].root.membrane_intact);
    }

    #[test]
    fn no_gas_no_event() {
        let mut st = kinetic_state(vec![]);
        let root = Compartment::sphere("m0", 20.0).unwrap();
        st.mvls.push(Mvl::new(Morphology::Plain, root).unwrap());
        let events = swelling_and_burst(&mut st, 1.06, 1e9).unwrap();
        assert!(events.is_empty());
    }

    #[test]
    fn depth2_burst_reparents_children_and_conserves() {
        let mut st = kinetic_state(vec![Species::new("x", PermClass::Macromolecule)]);
        let mut root = Compartment::sphere("m0", 65.0).unwrap();
        let mut mid = Compartment::sphere("m0.0", 20.0).unwrap();
        let mut leaf = Compartment::sphere("m0.0.0", 6.0).unwrap();
        leaf.contents.set("x", 5.0);
        mid.contents.set("x", 7.0);
        // mid (4188.8 fL) needs > 10053 amol to burst; the root (143793 fL)
        // would need > 345103, so 20000 bursts mid alone
        mid.gas_accumulated = 20_000.0;
        mid.attach_child(leaf).unwrap();
        root.attach_child(mid).unwrap();
        root.contents.set("x", 11.0);
        st.mvls.push(Mvl::new(Morphology::T1b, root).unwrap());
        let before_total = st.species_total("x");

        let events = swelling_and_burst(&mut st, 1.06, 0.025).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].compartment_id, "m0.0");
        let root = &st.mvls[0].root;
        // the leaf is now a depth-2 child of the root
        let leaf = root.find("m0.0.0").unwrap();
        assert_eq!(leaf.depth, 2);
        assert!(leaf.membrane_intact);
        assert_eq!(leaf.contents.amount("x"), 5.0);
        // burst compartment's contents and gas landed in the root
        assert_eq!(root.contents.amount("x"), 18.0);
        assert_eq!(root.gas_accumulated, 20_000.0);
        assert!(root.membrane_intact);
        assert_eq!(st.species_total("x"), before_total);
        root.validate().unwrap();
    }

    #[test]
    fn root_burst_liberates_children_as_mvls() {
        let mut st = kinetic_state(vec![Species::new("x", PermClass::Macromolecule)]);
        st.environment = Compartment::environment_with_volume(1e7).unwrap();
        let mut root = Compartment::sphere("m0", 65.0).unwrap();
        let mut mid = Compartment::sphere("m0.0", 20.0).unwrap();
        mid.attach_child(Compartment::sphere("m0.0.0", 6.0).unwrap()).unwrap();
        root.attach_child(mid).unwrap();
        root.attach_child(Compartment::sphere("m0.1", 10.0).unwrap()).unwrap();
        root.contents.set("x", 9.0);
        root.gas_accumulated = 1e9;
        st.mvls.push(Mvl::new(Morphology::T1b, root).unwrap());

        swelling_and_burst(&mut st, 1.06, 0.025).unwrap();
        assert_eq!(st.mvls.len(), 3, "two children liberated");
        assert_eq!(st.environment.contents.amount("x"), 9.0);
        let freed = st.mvl("m0.0").unwrap();
        assert_eq!(freed.root.depth, 1);
        assert_eq!(freed.morphology, Morphology::T1a);
        assert_eq!(freed.root.find("m0.0.0").unwrap().depth, 2);
        let plain = st.mvl("m0.1").unwrap();
        assert_eq!(plain.morphology, Morphology::Plain);
    }

    #[test]
    fn gas_cascade_bursts_parent_in_same_call() {
        // leaf gas pushes it over; its gas lands in the mid compartment,
        // which then also crosses the threshold in the same sweep
        let mut st = kinetic_state(vec![]);
        st.environment = Compartment::environment_with_volume(1e7).unwrap();
        let mut root = Compartment::sphere("m0", 65.0).unwrap();
        let mut mid = Compartment::sphere("m0.0", 20.0).unwrap();
        let mut leaf = Compartment::sphere("m0.0.0", 12.0).unwrap();
        // leaf volume ~904.8 fL; mid ~4188.8 fL. Give the leaf enough gas to
        // burst itself and push mid over: need > 0.06·4188.8/0.025 ≈ 10053
        leaf.gas_accumulated = 12_000.0;
        mid.attach_child(leaf).unwrap();
        root.attach_child(mid).unwrap();
        st.mvls.push(Mvl::new(Morphology::T1b, root).unwrap());

        let events = swelling_and_burst(&mut st, 1.06, 0.025).unwrap();
        let burst_ids: Vec<&str> = events.iter().map(|e| e.compartment_id.as_str()).collect();
        assert!(burst_ids.contains(&"m0.0.0"));
        assert!(burst_ids.contains(&"m0.0"), "cascade did not reach the parent");
        // root absorbed all the gas; 12000·0.025 = 300 fL over 143793 is
        // nowhere near its threshold
        assert!(st.mvls[0].root.membrane_intact);
        assert_eq!(st.mvls[0].root.gas_accumulated, 12_000.0);
    }
}
