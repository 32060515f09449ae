//! Word-level sequential netlist and its line-based text format.
//!
//! The format is a small BTOR2 dialect. Every line starts with a unique
//! positive id and ids must increase, so the file is topologically ordered:
//!
//! ```text
//! 1 sort bitvec 8
//! 2 input 1 soc.in.data
//! 3 state 1 soc.reg
//! 4 add 1 3 2 soc.sum     ; optional trailing symbol names the node
//! 5 next 3 4
//! 6 output 4 soc.out
//! ```
//!
//! A state whose `next` line points back at the state itself holds its value
//! forever. A state without an `init` line starts from an arbitrary value.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

use thiserror::Error;

pub type NodeId = u32;

/// Widest bit-vector the evaluator and encoder support.
pub const MAX_BV_WIDTH: u32 = 64;
/// Widest array index accepted by the parser.
pub const MAX_INDEX_WIDTH: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sort {
    BitVec(u32),
    Array { index: u32, elem: u32 },
}

impl Sort {
    pub fn width(self) -> Option<u32> {
        match self {
            Sort::BitVec(w) => Some(w),
            Sort::Array { .. } => None,
        }
    }

    pub fn is_array(self) -> bool {
        matches!(self, Sort::Array { .. })
    }

    /// Number of propositional bits needed to represent a value of this sort
    /// when arrays are fully expanded.
    pub fn bit_count(self) -> u64 {
        match self {
            Sort::BitVec(w) => u64::from(w),
            Sort::Array { index, elem } => (1u64 << index) * u64::from(elem),
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::BitVec(w) => write!(f, "bv{w}"),
            Sort::Array { index, elem } => write!(f, "array[bv{index} -> bv{elem}]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    /// Constant; for array sorts the value is the default element.
    Const(u64),
    Input,
    State,
    Not,
    And,
    Or,
    Xor,
    Add,
    Sub,
    Mul,
    Eq,
    Ult,
    Ite,
    Concat,
    Slice { hi: u32, lo: u32 },
    Read,
    Write,
}

impl Op {
    pub fn keyword(self) -> &'static str {
        match self {
            Op::Const(_) => "const",
            Op::Input => "input",
            Op::State => "state",
            Op::Not => "not",
            Op::And => "and",
            Op::Or => "or",
            Op::Xor => "xor",
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Eq => "eq",
            Op::Ult => "ult",
            Op::Ite => "ite",
            Op::Concat => "concat",
            Op::Slice { .. } => "slice",
            Op::Read => "read",
            Op::Write => "write",
        }
    }

    fn arity(self) -> usize {
        match self {
            Op::Const(_) | Op::Input | Op::State => 0,
            Op::Not | Op::Slice { .. } => 1,
            Op::Ite | Op::Write => 3,
            _ => 2,
        }
    }

    fn from_keyword(word: &str) -> Option<Op> {
        Some(match word {
            "not" => Op::Not,
            "and" => Op::And,
            "or" => Op::Or,
            "xor" => Op::Xor,
            "add" => Op::Add,
            "sub" => Op::Sub,
            "mul" => Op::Mul,
            "eq" => Op::Eq,
            "ult" => Op::Ult,
            "ite" => Op::Ite,
            "concat" => Op::Concat,
            "read" => Op::Read,
            "write" => Op::Write,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    pub op: Op,
    pub sort_id: NodeId,
    pub sort: Sort,
    pub args: Vec<NodeId>,
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateDecl {
    pub node: NodeId,
    pub name: String,
    /// Line id of the `next` declaration.
    pub next_line: NodeId,
    pub next: NodeId,
    /// Line id and expression of the optional `init` declaration.
    pub init: Option<(NodeId, NodeId)>,
}

impl StateDecl {
    pub fn is_hold(&self) -> bool {
        self.next == self.node
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputDecl {
    pub id: NodeId,
    pub expr: NodeId,
    pub name: String,
}

/// Something that can be a member of a [`StateSet`](crate::stateset::StateSet):
/// a state variable or a primary output treated as pseudo-state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signal<'a> {
    State(&'a StateDecl),
    Output(&'a OutputDecl),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("id {0} is declared twice")]
    DuplicateId(NodeId),
    #[error("id {id} must be larger than the previous id {prev}")]
    Unordered { id: NodeId, prev: NodeId },
    #[error("id {id} refers to {arg}, which is not declared before it")]
    ForwardReference { id: NodeId, arg: NodeId },
    #[error("id {id}: `{op}` expects {expected} arguments, got {got}")]
    Arity {
        id: NodeId,
        op: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("id {id}: {msg}")]
    SortMismatch { id: NodeId, msg: String },
    #[error("array index width {0} exceeds the limit of {MAX_INDEX_WIDTH}")]
    IndexTooWide(u32),
    #[error("bit-vector width {0} is outside 1..={MAX_BV_WIDTH}")]
    BadWidth(u32),
    #[error("name `{0}` is declared twice")]
    DuplicateName(String),
    #[error("state `{0}` has no next function (use `next <id> <id>` to hold)")]
    MissingNext(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Netlist {
    sorts: BTreeMap<NodeId, Sort>,
    nodes: Vec<Node>,
    slot: HashMap<NodeId, usize>,
    states: Vec<StateDecl>,
    inputs: Vec<NodeId>,
    outputs: Vec<OutputDecl>,
    names: HashMap<String, NodeId>,
}

impl Netlist {
    pub fn parse(text: &str) -> Result<Netlist, ParseError> {
        Parser::default().run(text)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.slot.get(&id).map(|&i| &self.nodes[i])
    }

    /// Position of a node in [`Netlist::nodes`].
    pub fn slot(&self, id: NodeId) -> Option<usize> {
        self.slot.get(&id).copied()
    }

    pub fn states(&self) -> &[StateDecl] {
        &self.states
    }

    pub fn inputs(&self) -> &[NodeId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[OutputDecl] {
        &self.outputs
    }

    pub fn state(&self, node: NodeId) -> Option<&StateDecl> {
        self.states.iter().find(|s| s.node == node)
    }

    pub fn output(&self, id: NodeId) -> Option<&OutputDecl> {
        self.outputs.iter().find(|o| o.id == id)
    }

    pub fn signal(&self, id: NodeId) -> Option<Signal<'_>> {
        self.state(id)
            .map(Signal::State)
            .or_else(|| self.output(id).map(Signal::Output))
    }

    /// Name of a state, output, input or named node.
    pub fn name_of(&self, id: NodeId) -> Option<&str> {
        if let Some(o) = self.output(id) {
            return Some(&o.name);
        }
        self.node(id).and_then(|n| n.name.as_deref())
    }

    /// Resolves a hierarchical name to a declaration id. Outputs resolve to
    /// their output line id, everything else to its node id.
    pub fn lookup(&self, name: &str) -> Option<NodeId> {
        self.names.get(name).copied()
    }

    /// Resolves a name to the node carrying its value; outputs map to their
    /// driving expression.
    pub fn value_node(&self, name: &str) -> Option<NodeId> {
        let id = self.lookup(name)?;
        Some(self.output(id).map_or(id, |o| o.expr))
    }

    /// Sort of a signal or node.
    pub fn sort_of(&self, id: NodeId) -> Option<Sort> {
        match self.output(id) {
            Some(o) => self.node(o.expr).map(|n| n.sort),
            None => self.node(id).map(|n| n.sort),
        }
    }

    /// Total number of state bits of one design instance, arrays expanded.
    pub fn state_bits(&self) -> u64 {
        self.states
            .iter()
            .map(|s| self.node(s.node).map_or(0, |n| n.sort.bit_count()))
            .sum()
    }

    /// Serializes back to the text format. The result reparses to an equal
    /// netlist.
    pub fn print(&self) -> String {
        enum Line<'a> {
            Sort(Sort),
            Node(&'a Node),
            Next(&'a StateDecl),
            Init(&'a StateDecl, NodeId),
            Output(&'a OutputDecl),
        }
        let mut lines: BTreeMap<NodeId, Line<'_>> = BTreeMap::new();
        for (&id, &sort) in &self.sorts {
            lines.insert(id, Line::Sort(sort));
        }
        for node in &self.nodes {
            lines.insert(node.id, Line::Node(node));
        }
        for st in &self.states {
            lines.insert(st.next_line, Line::Next(st));
            if let Some((line, expr)) = st.init {
                lines.insert(line, Line::Init(st, expr));
            }
        }
        for out in &self.outputs {
            lines.insert(out.id, Line::Output(out));
        }
        let sort_id = |sort: Sort| {
            self.sorts
                .iter()
                .find(|(_, s)| **s == sort)
                .map(|(id, _)| *id)
                .unwrap_or_default()
        };
        let mut text = String::new();
        for (id, line) in lines {
            match line {
                Line::Sort(Sort::BitVec(w)) => writeln!(text, "{id} sort bitvec {w}"),
                Line::Sort(Sort::Array { index, elem }) => writeln!(
                    text,
                    "{id} sort array {} {}",
                    sort_id(Sort::BitVec(index)),
                    sort_id(Sort::BitVec(elem))
                ),
                Line::Node(node) => {
                    let _ = write!(text, "{id} {} {}", node.op.keyword(), node.sort_id);
                    match node.op {
                        Op::Const(v) => {
                            let _ = write!(text, " {v:x}");
                        }
                        Op::Slice { hi, lo } => {
                            let _ = write!(text, " {} {hi} {lo}", node.args[0]);
                        }
                        _ => {
                            for a in &node.args {
                                let _ = write!(text, " {a}");
                            }
                        }
                    }
                    if let Some(name) = &node.name {
                        let _ = write!(text, " {name}");
                    }
                    writeln!(text)
                }
                Line::Next(st) => writeln!(text, "{id} next {} {}", st.node, st.next),
                Line::Init(st, expr) => writeln!(text, "{id} init {} {expr}", st.node),
                Line::Output(out) => writeln!(text, "{id} output {} {}", out.expr, out.name),
            }
            .expect("writing to a String cannot fail");
        }
        text
    }
}

#[derive(Default)]
struct Parser {
    net: Netlist,
    last_id: Option<NodeId>,
    next: HashMap<NodeId, (NodeId, NodeId)>,
    init: HashMap<NodeId, (NodeId, NodeId)>,
    state_order: Vec<NodeId>,
    line: usize,
}

impl Parser {
    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: self.line,
            kind,
        }
    }

    fn syntax(&self, msg: impl Into<String>) -> ParseError {
        self.err(ParseErrorKind::Syntax(msg.into()))
    }

    fn run(mut self, text: &str) -> Result<Netlist, ParseError> {
        for (idx, raw) in text.lines().enumerate() {
            self.line = idx + 1;
            let content = raw.split(';').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = content.split_whitespace().collect();
            self.line_tokens(&tokens)?;
        }
        self.finish()
    }

    fn number<T: std::str::FromStr>(&self, tok: Option<&&str>, what: &str) -> Result<T, ParseError> {
        let tok = tok.ok_or_else(|| self.syntax(format!("missing {what}")))?;
        tok.parse()
            .map_err(|_| self.syntax(format!("expected {what}, found `{tok}`")))
    }

    fn line_tokens(&mut self, tokens: &[&str]) -> Result<(), ParseError> {
        let id: NodeId = self.number(tokens.first(), "line id")?;
        if id == 0 {
            return Err(self.syntax("ids must be positive"));
        }
        if self.net.sorts.contains_key(&id) || self.net.slot.contains_key(&id) {
            return Err(self.err(ParseErrorKind::DuplicateId(id)));
        }
        if let Some(prev) = self.last_id {
            if id <= prev {
                return Err(self.err(ParseErrorKind::Unordered { id, prev }));
            }
        }
        self.last_id = Some(id);
        let kw = *tokens
            .get(1)
            .ok_or_else(|| self.syntax("missing keyword"))?;
        let rest = &tokens[2..];
        match kw {
            "sort" => self.sort_line(id, rest),
            "input" | "state" => self.decl_line(id, kw, rest),
            "const" => self.const_line(id, rest),
            "next" | "init" => self.next_init_line(id, kw, rest),
            "output" => self.output_line(id, rest),
            "slice" => self.slice_line(id, rest),
            other => match Op::from_keyword(other) {
                Some(op) => self.op_line(id, op, rest),
                None => Err(self.syntax(format!("unknown keyword `{other}`"))),
            },
        }
    }

    fn sort_line(&mut self, id: NodeId, rest: &[&str]) -> Result<(), ParseError> {
        let sort = match rest.first().copied() {
            Some("bitvec") => {
                let w: u32 = self.number(rest.get(1), "width")?;
                if w == 0 || w > MAX_BV_WIDTH {
                    return Err(self.err(ParseErrorKind::BadWidth(w)));
                }
                Sort::BitVec(w)
            }
            Some("array") => {
                let idx = self.sort_ref(rest.get(1))?;
                let elem = self.sort_ref(rest.get(2))?;
                let (Sort::BitVec(index), Sort::BitVec(elem)) = (idx, elem) else {
                    return Err(self.syntax("array index and element sorts must be bit-vectors"));
                };
                if index > MAX_INDEX_WIDTH {
                    return Err(self.err(ParseErrorKind::IndexTooWide(index)));
                }
                Sort::Array { index, elem }
            }
            _ => return Err(self.syntax("expected `bitvec` or `array`")),
        };
        if rest.len() > if sort.is_array() { 3 } else { 2 } {
            return Err(self.syntax("trailing tokens after sort"));
        }
        self.net.sorts.insert(id, sort);
        Ok(())
    }

    fn sort_ref(&self, tok: Option<&&str>) -> Result<Sort, ParseError> {
        let sid: NodeId = self.number(tok, "sort id")?;
        self.net
            .sorts
            .get(&sid)
            .copied()
            .ok_or_else(|| self.syntax(format!("{sid} is not a declared sort")))
    }

    fn check_name(&mut self, name: &str, id: NodeId) -> Result<(), ParseError> {
        if name.parse::<i64>().is_ok() {
            return Err(self.syntax(format!("name `{name}` must not be numeric")));
        }
        if self.net.names.insert(name.to_string(), id).is_some() {
            return Err(self.err(ParseErrorKind::DuplicateName(name.to_string())));
        }
        Ok(())
    }

    fn push_node(&mut self, node: Node) -> Result<(), ParseError> {
        if let Some(name) = &node.name {
            let name = name.clone();
            self.check_name(&name, node.id)?;
        }
        self.net.slot.insert(node.id, self.net.nodes.len());
        self.net.nodes.push(node);
        Ok(())
    }

    fn decl_line(&mut self, id: NodeId, kw: &str, rest: &[&str]) -> Result<(), ParseError> {
        let sort_id: NodeId = self.number(rest.first(), "sort id")?;
        let sort = self.sort_ref(rest.first())?;
        let name = rest
            .get(1)
            .ok_or_else(|| self.syntax(format!("{kw} needs a name")))?;
        if rest.len() > 2 {
            return Err(self.syntax("trailing tokens after name"));
        }
        let op = if kw == "input" { Op::Input } else { Op::State };
        self.push_node(Node {
            id,
            op,
            sort_id,
            sort,
            args: Vec::new(),
            name: Some(name.to_string()),
        })?;
        if op == Op::Input {
            self.net.inputs.push(id);
        } else {
            self.state_order.push(id);
        }
        Ok(())
    }

    fn const_line(&mut self, id: NodeId, rest: &[&str]) -> Result<(), ParseError> {
        let sort_id: NodeId = self.number(rest.first(), "sort id")?;
        let sort = self.sort_ref(rest.first())?;
        let tok = rest.get(1).ok_or_else(|| self.syntax("const needs a value"))?;
        let digits = tok.trim_start_matches("0x");
        let value = u64::from_str_radix(digits, 16)
            .map_err(|_| self.syntax(format!("bad hex value `{tok}`")))?;
        let width = match sort {
            Sort::BitVec(w) => w,
            Sort::Array { elem, .. } => elem,
        };
        if width < 64 && value >> width != 0 {
            return Err(self.err(ParseErrorKind::SortMismatch {
                id,
                msg: format!("constant {value:#x} does not fit in {width} bits"),
            }));
        }
        let name = self.trailing_name(rest, 2)?;
        self.push_node(Node {
            id,
            op: Op::Const(value),
            sort_id,
            sort,
            args: Vec::new(),
            name,
        })
    }

    fn trailing_name(&self, rest: &[&str], at: usize) -> Result<Option<String>, ParseError> {
        match rest.len() {
            n if n == at => Ok(None),
            n if n == at + 1 => Ok(Some(rest[at].to_string())),
            _ => Err(self.syntax("too many tokens")),
        }
    }

    fn arg(&self, id: NodeId, tok: &str) -> Result<&Node, ParseError> {
        let arg: NodeId = tok
            .parse()
            .map_err(|_| self.syntax(format!("expected node id, found `{tok}`")))?;
        if arg >= id {
            return Err(self.err(ParseErrorKind::ForwardReference { id, arg }));
        }
        self.net
            .node(arg)
            .ok_or_else(|| self.err(ParseErrorKind::ForwardReference { id, arg }))
    }

    fn mismatch(&self, id: NodeId, msg: impl Into<String>) -> ParseError {
        self.err(ParseErrorKind::SortMismatch {
            id,
            msg: msg.into(),
        })
    }

    fn slice_line(&mut self, id: NodeId, rest: &[&str]) -> Result<(), ParseError> {
        let sort_id: NodeId = self.number(rest.first(), "sort id")?;
        let sort = self.sort_ref(rest.first())?;
        if rest.len() < 4 {
            return Err(self.err(ParseErrorKind::Arity {
                id,
                op: "slice",
                expected: 3,
                got: rest.len().saturating_sub(1),
            }));
        }
        let arg = self.arg(id, rest[1])?.clone();
        let hi: u32 = self.number(rest.get(2), "high bit")?;
        let lo: u32 = self.number(rest.get(3), "low bit")?;
        let name = self.trailing_name(rest, 4)?;
        let Some(aw) = arg.sort.width() else {
            return Err(self.mismatch(id, "cannot slice an array"));
        };
        if hi < lo || hi >= aw {
            return Err(self.mismatch(id, format!("slice [{hi}:{lo}] out of range for width {aw}")));
        }
        if sort != Sort::BitVec(hi - lo + 1) {
            return Err(self.mismatch(id, format!("slice result must be bv{}", hi - lo + 1)));
        }
        self.push_node(Node {
            id,
            op: Op::Slice { hi, lo },
            sort_id,
            sort,
            args: vec![arg.id],
            name,
        })
    }

    fn op_line(&mut self, id: NodeId, op: Op, rest: &[&str]) -> Result<(), ParseError> {
        let sort_id: NodeId = self.number(rest.first(), "sort id")?;
        let operands = &rest[1..];
        let numeric = operands
            .iter()
            .take_while(|t| t.parse::<NodeId>().is_ok())
            .count();
        let expected = op.arity();
        if numeric != expected || operands.len() > expected + 1 {
            return Err(self.err(ParseErrorKind::Arity {
                id,
                op: op.keyword(),
                expected,
                got: numeric,
            }));
        }
        let sort = self.sort_ref(rest.first())?;
        let mut args = Vec::with_capacity(expected);
        let mut arg_sorts = Vec::with_capacity(expected);
        for tok in &operands[..expected] {
            let node = self.arg(id, tok)?;
            args.push(node.id);
            arg_sorts.push(node.sort);
        }
        self.check_sorts(id, op, sort, &arg_sorts)?;
        let name = operands.get(expected).map(|s| s.to_string());
        self.push_node(Node {
            id,
            op,
            sort_id,
            sort,
            args,
            name,
        })
    }

    fn check_sorts(&self, id: NodeId, op: Op, sort: Sort, args: &[Sort]) -> Result<(), ParseError> {
        let same = |what: &str| -> Result<(), ParseError> {
            if sort.is_array() || args.iter().any(|a| *a != sort) {
                Err(self.mismatch(id, format!("{what} needs bit-vector operands of the result sort {sort}")))
            } else {
                Ok(())
            }
        };
        match op {
            Op::Not | Op::And | Op::Or | Op::Xor | Op::Add | Op::Sub | Op::Mul => same(op.keyword()),
            Op::Eq | Op::Ult => {
                if sort != Sort::BitVec(1) {
                    return Err(self.mismatch(id, format!("{} produces bv1", op.keyword())));
                }
                if args[0] != args[1] || args[0].is_array() {
                    return Err(self.mismatch(id, "comparison operands must share a bit-vector sort"));
                }
                Ok(())
            }
            Op::Ite => {
                if args[0] != Sort::BitVec(1) {
                    return Err(self.mismatch(id, "ite condition must be bv1"));
                }
                if args[1] != sort || args[2] != sort {
                    return Err(self.mismatch(id, "ite branches must match the result sort"));
                }
                Ok(())
            }
            Op::Concat => match (args[0], args[1], sort) {
                (Sort::BitVec(a), Sort::BitVec(b), Sort::BitVec(r)) if a + b == r => Ok(()),
                _ => Err(self.mismatch(id, "concat result width must be the sum of its operands")),
            },
            Op::Read => match args[0] {
                Sort::Array { index, elem } if args[1] == Sort::BitVec(index) && sort == Sort::BitVec(elem) => Ok(()),
                _ => Err(self.mismatch(id, "read expects (array, index) and yields the element sort")),
            },
            Op::Write => match args[0] {
                Sort::Array { index, elem }
                    if sort == args[0] && args[1] == Sort::BitVec(index) && args[2] == Sort::BitVec(elem) =>
                {
                    Ok(())
                }
                _ => Err(self.mismatch(id, "write expects (array, index, element) and yields the array")),
            },
            Op::Const(_) | Op::Input | Op::State | Op::Slice { .. } => Ok(()),
        }
    }

    fn next_init_line(&mut self, id: NodeId, kw: &str, rest: &[&str]) -> Result<(), ParseError> {
        if rest.len() != 2 {
            return Err(self.syntax(format!("{kw} expects <state_id> <expr_id>")));
        }
        let state = self.arg(id, rest[0])?.clone();
        if state.op != Op::State {
            return Err(self.mismatch(id, format!("{} is not a state", state.id)));
        }
        let expr = self.arg(id, rest[1])?;
        if expr.sort != state.sort {
            return Err(self.mismatch(
                id,
                format!("{kw} expression sort {} differs from state sort {}", expr.sort, state.sort),
            ));
        }
        let expr = expr.id;
        let table = if kw == "next" { &mut self.next } else { &mut self.init };
        if table.insert(state.id, (id, expr)).is_some() {
            return Err(self.syntax(format!("state {} has two {kw} lines", state.id)));
        }
        Ok(())
    }

    fn output_line(&mut self, id: NodeId, rest: &[&str]) -> Result<(), ParseError> {
        if rest.len() != 2 {
            return Err(self.syntax("output expects <expr_id> <name>"));
        }
        let expr = self.arg(id, rest[0])?;
        if expr.sort.is_array() {
            return Err(self.mismatch(id, "outputs must be bit-vectors"));
        }
        let expr = expr.id;
        self.check_name(rest[1], id)?;
        self.net.outputs.push(OutputDecl {
            id,
            expr,
            name: rest[1].to_string(),
        });
        Ok(())
    }

    fn finish(mut self) -> Result<Netlist, ParseError> {
        self.line = 0;
        for node in std::mem::take(&mut self.state_order) {
            let name = self.net.node(node).and_then(|n| n.name.clone()).unwrap_or_default();
            let Some(&(next_line, next)) = self.next.get(&node) else {
                return Err(self.err(ParseErrorKind::MissingNext(name)));
            };
            self.net.states.push(StateDecl {
                node,
                name,
                next_line,
                next,
                init: self.init.get(&node).copied(),
            });
        }
        Ok(self.net)
    }
}
