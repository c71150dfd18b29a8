use super::admittance::Admittance;

/// Which half of a polar voltage variable a row refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    Angle,
    Magnitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    /// `x_slave - x_master = 0` for one component.
    Tie {
        slave: usize,
        master: usize,
        component: Component,
    },
    /// `x_node = rhs`: slack angle, slack magnitude or PV magnitude.
    Fixed { node: usize, component: Component },
}

/// One column `c_k` of `C` together with its right-hand side `b_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub kind: ConstraintKind,
    /// Nonzero entries over the voltage part of the state (indices < 2n).
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl Constraint {
    pub fn fixed(node: usize, component: Component, value: f64) -> Self {
        Self {
            kind: ConstraintKind::Fixed { node, component },
            terms: Vec::new(),
            rhs: value,
        }
    }

    pub fn tie(slave: usize, master: usize, component: Component) -> Self {
        Self {
            kind: ConstraintKind::Tie {
                slave,
                master,
                component,
            },
            terms: Vec::new(),
            rhs: 0.0,
        }
    }

    fn bind(mut self, n: usize) -> Self {
        let offset = |c: Component| match c {
            Component::Angle => 0,
            Component::Magnitude => n,
        };
        self.terms = match self.kind {
            ConstraintKind::Fixed { node, component } => vec![(offset(component) + node, 1.0)],
            ConstraintKind::Tie {
                slave,
                master,
                component,
            } => vec![
                (offset(component) + slave, 1.0),
                (offset(component) + master, -1.0),
            ],
        };
        self
    }
}

/// Everything the power-flow machinery needs: `Y`, `s`, and `(C, b)`.
///
/// Nodes are buses in a bus-branch model and bus sections in a breaker model.
#[derive(Debug, Clone)]
pub struct FlowModel {
    pub y: Admittance,
    pub injections: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl FlowModel {
    pub fn new(y: Admittance, injections: Vec<f64>, constraints: Vec<Constraint>) -> Self {
        let n = y.n();
        assert_eq!(injections.len(), 2 * n, "injection vector must have 2n entries");
        let constraints = constraints.into_iter().map(|c| c.bind(n)).collect();
        Self {
            y,
            injections,
            constraints,
        }
    }

    /// Number of voltage nodes.
    pub fn n(&self) -> usize {
        self.y.n()
    }

    /// Number of constraint columns.
    pub fn c(&self) -> usize {
        self.constraints.len()
    }

    /// Dimension of the stacked state `(theta, |v|, lambda)`.
    pub fn dim(&self) -> usize {
        2 * self.n() + self.c()
    }

    pub fn rhs(&self) -> Vec<f64> {
        self.constraints.iter().map(|c| c.rhs).collect()
    }

    /// State index of a voltage component.
    pub fn voltage_index(&self, node: usize, component: Component) -> usize {
        match component {
            Component::Angle => node,
            Component::Magnitude => self.n() + node,
        }
    }

    /// State index of multiplier `k`.
    pub fn multiplier_index(&self, k: usize) -> usize {
        2 * self.n() + k
    }

    /// Whether some constraint column already fixes `x_node` for `component`.
    pub fn is_fixed(&self, node: usize, component: Component) -> bool {
        self.constraints.iter().any(|c| {
            matches!(c.kind, ConstraintKind::Fixed { node: n, component: comp } if n == node && comp == component)
        })
    }
}
