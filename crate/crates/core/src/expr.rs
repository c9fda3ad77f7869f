//! Typed expression trees over a fixed set of arithmetic primitives.
//!
//! Trees are stored as a flat prefix-order node vector, the same layout
//! DEAP-style GP systems use: the subtree rooted at index `i` occupies a
//! contiguous slice `i..subtree_end(i)`, which makes crossover and mutation
//! plain slice splices.
//!
//! Leaves refer to the [`PrimitiveSet`] by index. A tree does not own its
//! primitive set, so printing needs one passed in ([`ExpressionTree::display`]).

use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::math;
use crate::{Error, Result};

/// Function primitives. `Neg` is a separate unary node so that `-x` has
/// length 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Neg,
    Sin,
    Cos,
    Exp,
}

impl Op {
    pub const ALL: [Op; 7] = [Op::Add, Op::Sub, Op::Mul, Op::Neg, Op::Sin, Op::Cos, Op::Exp];

    pub fn arity(self) -> usize {
        match self {
            Op::Add | Op::Sub | Op::Mul => 2,
            Op::Neg | Op::Sin | Op::Cos | Op::Exp => 1,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Neg => "neg",
            Op::Sin => "sin",
            Op::Cos => "cos",
            Op::Exp => "exp",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Op> {
        Op::ALL.into_iter().find(|op| op.symbol() == s)
    }

    #[inline]
    fn apply1(self, a: f64) -> f64 {
        match self {
            Op::Neg => -a,
            Op::Sin => math::sin(a),
            Op::Cos => math::cos(a),
            Op::Exp => math::exp(a),
            _ => unreachable!("binary op applied to one argument"),
        }
    }

    #[inline]
    fn apply2(self, a: f64, b: f64) -> f64 {
        match self {
            Op::Add => a + b,
            Op::Sub => a - b,
            Op::Mul => a * b,
            _ => unreachable!("unary op applied to two arguments"),
        }
    }
}

/// One tree node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Op(Op),
    /// Input variable, index into [`PrimitiveSet::terminals`].
    Var(u16),
    /// Named constant placeholder, index into [`PrimitiveSet::constants`].
    Const(u16),
    /// Numeric literal (from parsing or constant folding).
    Lit(f64),
}

impl Node {
    pub fn arity(&self) -> usize {
        match self {
            Node::Op(op) => op.arity(),
            _ => 0,
        }
    }
}

/// Function, terminal and constant symbols trees are built from.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveSet {
    functions: Vec<Op>,
    terminals: Vec<String>,
    constants: Vec<String>,
}

impl PrimitiveSet {
    pub fn new(functions: Vec<Op>, terminals: Vec<String>, constants: Vec<String>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for op in &functions {
            if !seen.insert(op.symbol().to_owned()) {
                return Err(Error::InvalidPrimitiveSet(format!("duplicate symbol `{}`", op.symbol())));
            }
        }
        for name in terminals.iter().chain(&constants) {
            if !is_identifier(name) {
                return Err(Error::InvalidPrimitiveSet(format!("`{name}` is not an identifier")));
            }
            if !seen.insert(name.clone()) {
                return Err(Error::InvalidPrimitiveSet(format!("duplicate symbol `{name}`")));
            }
        }
        if terminals.len() > u16::MAX as usize || constants.len() > u16::MAX as usize {
            return Err(Error::InvalidPrimitiveSet("too many symbols".to_owned()));
        }
        Ok(Self { functions, terminals, constants })
    }

    /// `{+, −, ·, neg, sin, cos, exp}` over `{x0d, x1d}` with constant `k`.
    pub fn two_oscillator_default() -> Self {
        Self::new(
            Op::ALL.to_vec(),
            vec!["x0d".to_owned(), "x1d".to_owned()],
            vec!["k".to_owned()],
        )
        .expect("default primitive set is valid")
    }

    pub fn functions(&self) -> &[Op] {
        &self.functions
    }

    pub fn terminals(&self) -> &[String] {
        &self.terminals
    }

    pub fn constants(&self) -> &[String] {
        &self.constants
    }

    /// Number of leaf symbols (variables and constants).
    pub fn leaf_count(&self) -> usize {
        self.terminals.len() + self.constants.len()
    }

    fn leaf(&self, i: usize) -> Node {
        if i < self.terminals.len() {
            Node::Var(i as u16)
        } else {
            Node::Const((i - self.terminals.len()) as u16)
        }
    }

    fn lookup_leaf(&self, name: &str) -> Option<Node> {
        if let Some(i) = self.terminals.iter().position(|t| t == name) {
            return Some(Node::Var(i as u16));
        }
        self.constants.iter().position(|c| c == name).map(|i| Node::Const(i as u16))
    }

    fn terminal_ratio(&self) -> f64 {
        let leaves = self.leaf_count() as f64;
        leaves / (leaves + self.functions.len() as f64)
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
}

/// Tree generation strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenMethod {
    Grow,
    Full,
    HalfAndHalf,
}

/// An expression tree in prefix order.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionTree {
    nodes: Vec<Node>,
}

impl ExpressionTree {
    /// Builds a tree from prefix-ordered nodes, checking that arities close.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Parse { pos: 0, msg: "empty expression".to_owned() });
        }
        let mut open = 1usize;
        for (i, n) in nodes.iter().enumerate() {
            if open == 0 {
                return Err(Error::Parse { pos: i, msg: "trailing nodes after complete tree".to_owned() });
            }
            open = open - 1 + n.arity();
        }
        if open != 0 {
            return Err(Error::Parse { pos: nodes.len(), msg: "missing arguments".to_owned() });
        }
        Ok(Self { nodes })
    }

    pub fn leaf(node: Node) -> Self {
        debug_assert_eq!(node.arity(), 0);
        Self { nodes: vec![node] }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Total node count.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Levels below the root; a single leaf has height 0.
    pub fn height(&self) -> usize {
        let mut stack: Vec<usize> = Vec::new();
        let mut max = 0;
        // depth of the next node = popped pending depth
        stack.push(0);
        for n in &self.nodes {
            let depth = stack.pop().expect("valid tree");
            max = max.max(depth);
            for _ in 0..n.arity() {
                stack.push(depth + 1);
            }
        }
        max
    }

    /// Exclusive end index of the subtree rooted at `start`.
    pub fn subtree_end(&self, start: usize) -> usize {
        let mut open = 1usize;
        let mut i = start;
        while open > 0 {
            open = open - 1 + self.nodes[i].arity();
            i += 1;
        }
        i
    }

    /// Depth of every node, in prefix order.
    pub fn depths(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![0usize];
        for n in &self.nodes {
            let d = stack.pop().expect("valid tree");
            out.push(d);
            for _ in 0..n.arity() {
                stack.push(d + 1);
            }
        }
        out
    }

    /// Indices of the constant placeholders used by the tree.
    pub fn constant_indices(&self) -> BTreeSet<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Const(i) => Some(*i as usize),
                _ => None,
            })
            .collect()
    }

    pub fn has_constants(&self) -> bool {
        self.nodes.iter().any(|n| matches!(n, Node::Const(_)))
    }

    /// Returns a copy with the subtree at `start` replaced by `with`.
    pub fn replace_subtree(&self, start: usize, with: &[Node]) -> ExpressionTree {
        let end = self.subtree_end(start);
        let mut nodes = Vec::with_capacity(self.nodes.len() - (end - start) + with.len());
        nodes.extend_from_slice(&self.nodes[..start]);
        nodes.extend_from_slice(with);
        nodes.extend_from_slice(&self.nodes[end..]);
        ExpressionTree { nodes }
    }

    /// Evaluates the tree. `vars[i]` binds terminal `i`, `consts[j]` binds
    /// constant `j`. Overflow is not an error: the result is simply
    /// non-finite and callers decide what that means.
    pub fn evaluate(&self, vars: &[f64], consts: &[f64]) -> Result<f64> {
        for n in &self.nodes {
            match *n {
                Node::Var(i) if i as usize >= vars.len() => {
                    return Err(Error::UnboundSymbol(format!("variable #{i}")))
                }
                Node::Const(i) if i as usize >= consts.len() => {
                    return Err(Error::UnboundSymbol(format!("constant #{i}")))
                }
                _ => {}
            }
        }
        Ok(self.eval_unchecked(vars, consts))
    }

    /// Evaluation without binding checks; indices must be in range.
    #[inline]
    pub(crate) fn eval_unchecked(&self, vars: &[f64], consts: &[f64]) -> f64 {
        // reverse prefix traversal: the stack never holds more than len values
        if self.nodes.len() <= 32 {
            let mut stack = [0.0f64; 32];
            eval_into(&self.nodes, vars, consts, &mut stack)
        } else {
            let mut stack = vec![0.0f64; self.nodes.len()];
            eval_into(&self.nodes, vars, consts, &mut stack)
        }
    }

    /// Evaluates with names resolved against `pset`; unknown or missing
    /// names are reported as [`Error::UnboundSymbol`].
    pub fn evaluate_named(&self, pset: &PrimitiveSet, bindings: &[(&str, f64)]) -> Result<f64> {
        let lookup = |name: &str| bindings.iter().find(|(n, _)| *n == name).map(|(_, v)| *v);
        let mut vars = vec![f64::NAN; pset.terminals.len()];
        let mut consts = vec![f64::NAN; pset.constants.len()];
        for n in &self.nodes {
            match *n {
                Node::Var(i) => {
                    let name = pset.terminals.get(i as usize).map(String::as_str).unwrap_or("?");
                    vars[i as usize] = lookup(name).ok_or_else(|| Error::UnboundSymbol(name.to_owned()))?;
                }
                Node::Const(i) => {
                    let name = pset.constants.get(i as usize).map(String::as_str).unwrap_or("?");
                    consts[i as usize] = lookup(name).ok_or_else(|| Error::UnboundSymbol(name.to_owned()))?;
                }
                _ => {}
            }
        }
        self.evaluate(&vars, &consts)
    }

    /// Replaces every variable-free subtree by its numeric value, with
    /// constant placeholders bound from `consts`.
    pub fn fold_constants(&self, consts: &[f64]) -> Result<ExpressionTree> {
        if let Some(i) = self.constant_indices().into_iter().find(|&i| i >= consts.len()) {
            return Err(Error::UnboundSymbol(format!("constant #{i}")));
        }
        let mut out = Vec::with_capacity(self.nodes.len());
        self.fold_from(0, consts, &mut out);
        Ok(ExpressionTree { nodes: out })
    }

    fn fold_from(&self, start: usize, consts: &[f64], out: &mut Vec<Node>) -> usize {
        let end = self.subtree_end(start);
        let slice = &self.nodes[start..end];
        if !slice.iter().any(|n| matches!(n, Node::Var(_))) {
            let v = eval_into(slice, &[], consts, &mut vec![0.0; slice.len()]);
            out.push(Node::Lit(v));
            return end;
        }
        out.push(self.nodes[start]);
        let mut child = start + 1;
        for _ in 0..self.nodes[start].arity() {
            child = self.fold_from(child, consts, out);
        }
        end
    }

    /// Prefix text such as `mul(neg(x0d), exp(k))`; parses back with [`parse`].
    pub fn display<'a>(&'a self, pset: &'a PrimitiveSet) -> DisplayTree<'a> {
        DisplayTree { tree: self, pset }
    }
}

fn eval_into(nodes: &[Node], vars: &[f64], consts: &[f64], stack: &mut [f64]) -> f64 {
    let mut sp = 0usize;
    for n in nodes.iter().rev() {
        match *n {
            Node::Var(i) => {
                stack[sp] = vars[i as usize];
                sp += 1;
            }
            Node::Const(i) => {
                stack[sp] = consts[i as usize];
                sp += 1;
            }
            Node::Lit(v) => {
                stack[sp] = v;
                sp += 1;
            }
            Node::Op(op) => {
                if op.arity() == 1 {
                    stack[sp - 1] = op.apply1(stack[sp - 1]);
                } else {
                    // first argument is on top
                    let a = stack[sp - 1];
                    let b = stack[sp - 2];
                    sp -= 1;
                    stack[sp - 1] = op.apply2(a, b);
                }
            }
        }
    }
    stack[0]
}

pub struct DisplayTree<'a> {
    tree: &'a ExpressionTree,
    pset: &'a PrimitiveSet,
}

impl fmt::Display for DisplayTree<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(nodes: &[Node], pset: &PrimitiveSet, i: usize, f: &mut fmt::Formatter<'_>) -> core::result::Result<usize, fmt::Error> {
            match nodes[i] {
                Node::Var(v) => {
                    f.write_str(pset.terminals.get(v as usize).map(String::as_str).unwrap_or("?"))?;
                    Ok(i + 1)
                }
                Node::Const(c) => {
                    f.write_str(pset.constants.get(c as usize).map(String::as_str).unwrap_or("?"))?;
                    Ok(i + 1)
                }
                Node::Lit(v) => {
                    write!(f, "{v:?}")?;
                    Ok(i + 1)
                }
                Node::Op(op) => {
                    write!(f, "{}(", op.symbol())?;
                    let mut next = i + 1;
                    for a in 0..op.arity() {
                        if a > 0 {
                            f.write_str(", ")?;
                        }
                        next = go(nodes, pset, next, f)?;
                    }
                    f.write_str(")")?;
                    Ok(next)
                }
            }
        }
        go(&self.tree.nodes, self.pset, 0, f).map(|_| ())
    }
}

/// Generates a random tree with height in `[min_h, max_h]`.
pub fn random_tree<R: Rng + ?Sized>(
    rng: &mut R,
    pset: &PrimitiveSet,
    min_h: usize,
    max_h: usize,
    method: GenMethod,
) -> Result<ExpressionTree> {
    if min_h < 1 || min_h > max_h {
        return Err(Error::InvalidHeightRange { min: min_h, max: max_h });
    }
    if pset.terminals.is_empty() {
        return Err(Error::EmptyPrimitiveSet);
    }
    if pset.functions.is_empty() {
        return Err(Error::InvalidPrimitiveSet("no functions to build height >= 1".to_owned()));
    }
    Ok(ExpressionTree { nodes: generate(rng, pset, min_h, max_h, method) })
}

/// DEAP-style generator; `min_h` may be 0 here (used by mutation).
pub(crate) fn generate<R: Rng + ?Sized>(
    rng: &mut R,
    pset: &PrimitiveSet,
    min_h: usize,
    max_h: usize,
    method: GenMethod,
) -> Vec<Node> {
    let method = match method {
        GenMethod::HalfAndHalf => {
            if rng.random_bool(0.5) {
                GenMethod::Grow
            } else {
                GenMethod::Full
            }
        }
        m => m,
    };
    let height = rng.random_range(min_h..=max_h);
    let ratio = pset.terminal_ratio();
    let mut nodes = Vec::new();
    let mut stack = vec![0usize];
    while let Some(depth) = stack.pop() {
        let leaf = pset.functions.is_empty()
            || depth == height
            || (method == GenMethod::Grow && depth >= min_h && rng.random::<f64>() < ratio);
        if leaf {
            nodes.push(pset.leaf(rng.random_range(0..pset.leaf_count())));
        } else {
            let op = pset.functions[rng.random_range(0..pset.functions.len())];
            nodes.push(Node::Op(op));
            for _ in 0..op.arity() {
                stack.push(depth + 1);
            }
        }
    }
    nodes
}

/// Parses prefix (`mul(neg(x0d), k)`) or infix (`-x0d*exp(k)`) text.
///
/// Grammar: `+`/`-` over `*`/`·` over unary minus; calls `name(args…)` for
/// the primitive functions; identifiers resolve to the set's terminals and
/// constants; numbers become literals.
pub fn parse(text: &str, pset: &PrimitiveSet) -> Result<ExpressionTree> {
    let mut p = Parser { src: text, pos: 0, pset };
    let mut nodes = Vec::new();
    p.expr(&mut nodes)?;
    p.skip_ws();
    if p.pos != text.len() {
        return Err(p.err("unexpected trailing input"));
    }
    ExpressionTree::from_nodes(nodes)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    pset: &'a PrimitiveSet,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse { pos: self.pos, msg: msg.to_owned() }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn eat(&mut self, set: &[char]) -> Option<char> {
        self.skip_ws();
        match self.peek() {
            Some(c) if set.contains(&c) => {
                self.bump();
                Some(c)
            }
            _ => None,
        }
    }

    // Builds prefix output by collecting operand subtrees first.
    fn expr(&mut self, out: &mut Vec<Node>) -> Result<()> {
        let mut acc = Vec::new();
        self.term(&mut acc)?;
        while let Some(c) = self.eat(&['+', '-', '−']) {
            let mut rhs = Vec::new();
            self.term(&mut rhs)?;
            let op = if c == '+' { Op::Add } else { Op::Sub };
            acc = join(op, acc, rhs);
        }
        out.extend(acc);
        Ok(())
    }

    fn term(&mut self, out: &mut Vec<Node>) -> Result<()> {
        let mut acc = Vec::new();
        self.unary(&mut acc)?;
        while self.eat(&['*', '·']).is_some() {
            let mut rhs = Vec::new();
            self.unary(&mut rhs)?;
            acc = join(Op::Mul, acc, rhs);
        }
        out.extend(acc);
        Ok(())
    }

    fn unary(&mut self, out: &mut Vec<Node>) -> Result<()> {
        if self.eat(&['-', '−']).is_some() {
            self.skip_ws();
            if matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '.') {
                let v = self.number()?;
                out.push(Node::Lit(-v));
                return Ok(());
            }
            out.push(Node::Op(Op::Neg));
            return self.unary(out);
        }
        self.primary(out)
    }

    fn primary(&mut self, out: &mut Vec<Node>) -> Result<()> {
        self.skip_ws();
        match self.peek() {
            Some('(') => {
                self.bump();
                self.expr(out)?;
                if self.eat(&[')']).is_none() {
                    return Err(self.err("expected `)`"));
                }
                Ok(())
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let v = self.number()?;
                out.push(Node::Lit(v));
                Ok(())
            }
            Some(c) if c.is_alphabetic() || c == '_' => {
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_alphanumeric() || c == '_') {
                    self.bump();
                }
                let name = &self.src[start..self.pos];
                self.skip_ws();
                if self.peek() == Some('(') {
                    let op = Op::from_symbol(name).ok_or_else(|| Error::Parse {
                        pos: start,
                        msg: format!("unknown function `{name}`"),
                    })?;
                    self.bump();
                    out.push(Node::Op(op));
                    for a in 0..op.arity() {
                        if a > 0 && self.eat(&[',']).is_none() {
                            return Err(self.err("expected `,`"));
                        }
                        self.expr(out)?;
                    }
                    if self.eat(&[')']).is_none() {
                        return Err(self.err(&format!("`{name}` takes {} argument(s)", op.arity())));
                    }
                    return Ok(());
                }
                if let Some(leaf) = self.pset.lookup_leaf(name) {
                    out.push(leaf);
                    return Ok(());
                }
                match name {
                    "inf" => out.push(Node::Lit(f64::INFINITY)),
                    "NaN" => out.push(Node::Lit(f64::NAN)),
                    _ => {
                        return Err(Error::Parse { pos: start, msg: format!("unknown symbol `{name}`") })
                    }
                }
                Ok(())
            }
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '.') {
            self.bump();
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let save = self.pos;
            self.bump();
            if matches!(self.peek(), Some('+' | '-')) {
                self.bump();
            }
            if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.bump();
                }
            } else {
                self.pos = save;
            }
        }
        self.src[start..self.pos]
            .parse::<f64>()
            .map_err(|_| Error::Parse { pos: start, msg: "malformed number".to_owned() })
    }
}

fn join(op: Op, lhs: Vec<Node>, rhs: Vec<Node>) -> Vec<Node> {
    let mut v = Vec::with_capacity(1 + lhs.len() + rhs.len());
    v.push(Node::Op(op));
    v.extend(lhs);
    v.extend(rhs);
    v
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl ExpressionTree {
    /// Prefix text using `pset` names, as an owned string.
    pub fn to_prefix(&self, pset: &PrimitiveSet) -> String {
        self.display(pset).to_string()
    }
}
