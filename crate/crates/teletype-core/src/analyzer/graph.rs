//! Import graph with deterministic cycle-edge removal.
//!
//! Analysis works over an acyclic graph. When imports form a cycle, the
//! edge whose (importer, importee) pair is lexicographically greatest within
//! the cycle is dropped, repeatedly, until no cycles remain. Dropped edges
//! surface as `ModuleHasCyclicDependency` at their require sites in strict
//! checking.
//!
//! Dirty propagation uses the raw (pre-removal) reverse edges so that edits
//! anywhere in a former cycle re-analyze every module that could observe
//! the change.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::kind::ModuleId;

#[derive(Debug, Clone, Default)]
pub struct ImportGraph {
    /// Kept edges, importer -> importees. Every module has an entry.
    deps: BTreeMap<ModuleId, BTreeSet<ModuleId>>,
    /// Reverse of the raw edges (including removed ones).
    raw_importers: BTreeMap<ModuleId, BTreeSet<ModuleId>>,
    removed: BTreeSet<(ModuleId, ModuleId)>,
}

impl ImportGraph {
    /// Build from raw import lists; targets outside `modules` are ignored
    /// (they surface as unknown-require errors, not edges).
    pub fn build(
        modules: &BTreeSet<ModuleId>,
        raw_imports: &BTreeMap<ModuleId, Vec<ModuleId>>,
    ) -> ImportGraph {
        let mut deps: BTreeMap<ModuleId, BTreeSet<ModuleId>> = modules
            .iter()
            .map(|m| (m.clone(), BTreeSet::new()))
            .collect();
        let mut raw_importers: BTreeMap<ModuleId, BTreeSet<ModuleId>> = modules
            .iter()
            .map(|m| (m.clone(), BTreeSet::new()))
            .collect();
        for (importer, targets) in raw_imports {
            for target in targets {
                if modules.contains(target) {
                    deps.get_mut(importer)
                        .expect("importer is a known module")
                        .insert(target.clone());
                    raw_importers
                        .get_mut(target)
                        .expect("target is a known module")
                        .insert(importer.clone());
                }
            }
        }
        let mut removed = BTreeSet::new();
        while let Some(cycle_edges) = find_cycle(&deps) {
            let worst = cycle_edges
                .into_iter()
                .max()
                .expect("cycle has at least one edge");
            deps.get_mut(&worst.0).unwrap().remove(&worst.1);
            removed.insert(worst);
        }
        ImportGraph {
            deps,
            raw_importers,
            removed,
        }
    }

    pub fn removed_edges(&self) -> &BTreeSet<(ModuleId, ModuleId)> {
        &self.removed
    }

    pub fn kept_deps(&self, module: &ModuleId) -> impl Iterator<Item = &ModuleId> {
        self.deps.get(module).into_iter().flatten()
    }

    /// Modules in dependency-first order over the kept edges.
    pub fn topo_order(&self) -> Vec<ModuleId> {
        let mut pending: BTreeMap<ModuleId, usize> = self
            .deps
            .iter()
            .map(|(m, deps)| (m.clone(), deps.len()))
            .collect();
        let mut kept_importers: BTreeMap<&ModuleId, Vec<&ModuleId>> = BTreeMap::new();
        for (importer, deps) in &self.deps {
            for dep in deps {
                kept_importers.entry(dep).or_default().push(importer);
            }
        }
        let mut ready: BTreeSet<ModuleId> = pending
            .iter()
            .filter(|&(_, &n)| n == 0)
            .map(|(m, _)| m.clone())
            .collect();
        let mut order = Vec::with_capacity(pending.len());
        while let Some(next) = ready.iter().next().cloned() {
            ready.remove(&next);
            order.push(next.clone());
            for importer in kept_importers.get(&next).into_iter().flatten() {
                let slot = pending.get_mut(*importer).unwrap();
                *slot -= 1;
                if *slot == 0 {
                    ready.insert((*importer).clone());
                }
            }
        }
        debug_assert_eq!(order.len(), self.deps.len(), "kept graph must be acyclic");
        order
    }

    /// The module plus everything that transitively imports it, over raw
    /// edges. This is the set that must be re-analyzed after an edit.
    pub fn dirty_closure(&self, module: &ModuleId) -> BTreeSet<ModuleId> {
        let mut out = BTreeSet::new();
        let mut queue = VecDeque::from([module.clone()]);
        while let Some(next) = queue.pop_front() {
            if !out.insert(next.clone()) {
                continue;
            }
            for importer in self.raw_importers.get(&next).into_iter().flatten() {
                queue.push_back(importer.clone());
            }
        }
        out
    }
}

/// Find one cycle in the kept edges, returned as its edge list, or `None`
/// when the graph is acyclic. Deterministic: DFS from the smallest module
/// id with sorted neighbor order.
fn find_cycle(
    deps: &BTreeMap<ModuleId, BTreeSet<ModuleId>>,
) -> Option<Vec<(ModuleId, ModuleId)>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Gray,
        Black,
    }
    fn dfs(
        node: &ModuleId,
        deps: &BTreeMap<ModuleId, BTreeSet<ModuleId>>,
        colors: &mut BTreeMap<ModuleId, Color>,
        stack: &mut Vec<ModuleId>,
    ) -> Option<Vec<(ModuleId, ModuleId)>> {
        colors.insert(node.clone(), Color::Gray);
        stack.push(node.clone());
        for next in deps.get(node).into_iter().flatten() {
            match colors.get(next).copied().unwrap_or(Color::White) {
                Color::White => {
                    if let Some(cycle) = dfs(next, deps, colors, stack) {
                        return Some(cycle);
                    }
                }
                Color::Gray => {
                    let from = stack
                        .iter()
                        .position(|m| m == next)
                        .expect("gray node is on the stack");
                    let nodes = &stack[from..];
                    let mut edges: Vec<(ModuleId, ModuleId)> = nodes
                        .windows(2)
                        .map(|w| (w[0].clone(), w[1].clone()))
                        .collect();
                    edges.push((nodes.last().unwrap().clone(), next.clone()));
                    return Some(edges);
                }
                Color::Black => {}
            }
        }
        stack.pop();
        colors.insert(node.clone(), Color::Black);
        None
    }

    let mut colors = BTreeMap::new();
    for start in deps.keys() {
        if colors.get(start).copied().unwrap_or(Color::White) == Color::White {
            let mut stack = Vec::new();
            if let Some(cycle) = dfs(start, deps, &mut colors, &mut stack) {
                return Some(cycle);
            }
        }
    }
    None
}
