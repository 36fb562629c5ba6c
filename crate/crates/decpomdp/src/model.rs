//! Dec-POMDP data model, instance-file parsing, and belief updates.
//!
//! A model is a set of agents jointly controlling one Markov process. All
//! tables are indexed by *joint* action/observation indices: the mixed-radix
//! encoding with agent 0 most significant,
//! `ja = ((a_0·A_1 + a_1)·A_2 + ...)·A_{n-1} + a_{n-1}`,
//! and identically for observations. Everything is zero-based.

use std::fmt;

use crate::Error;

#[derive(Debug, Clone)]
pub struct DecPomdp {
    pub num_agents: usize,
    pub num_states: usize,
    /// Actions available to each agent.
    pub actions: Vec<usize>,
    /// Observations each agent can receive.
    pub observations: Vec<usize>,
    /// Transition probabilities per joint action: `transition[ja][s * S + t]`
    /// = P(t | s, ja).
    pub transition: Vec<Vec<f64>>,
    /// Observation probabilities per joint action:
    /// `observation[ja][t * JO + jo]` = P(jo | ja, arrival state t).
    pub observation: Vec<Vec<f64>>,
    /// Expected immediate reward per joint action and state.
    pub reward: Vec<Vec<f64>>,
    /// Initial state distribution.
    pub start: Vec<f64>,
}

/// One violated model invariant, with enough location to fix the file.
#[derive(Debug, Clone)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

/// Mixed-radix encode, first component most significant.
pub fn encode_joint(components: &[usize], radices: &[usize]) -> usize {
    debug_assert_eq!(components.len(), radices.len());
    let mut flat = 0;
    for (&c, &r) in components.iter().zip(radices) {
        debug_assert!(c < r);
        flat = flat * r + c;
    }
    flat
}

/// Inverse of [`encode_joint`].
pub fn decode_joint(mut flat: usize, radices: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radices.len()];
    for i in (0..radices.len()).rev() {
        out[i] = flat % radices[i];
        flat /= radices[i];
    }
    debug_assert_eq!(flat, 0);
    out
}

impl DecPomdp {
    pub fn num_joint_actions(&self) -> usize {
        self.actions.iter().product()
    }

    pub fn num_joint_observations(&self) -> usize {
        self.observations.iter().product()
    }

    pub fn encode_joint_action(&self, parts: &[usize]) -> usize {
        encode_joint(parts, &self.actions)
    }

    pub fn decode_joint_action(&self, ja: usize) -> Vec<usize> {
        decode_joint(ja, &self.actions)
    }

    pub fn encode_joint_observation(&self, parts: &[usize]) -> usize {
        encode_joint(parts, &self.observations)
    }

    pub fn decode_joint_observation(&self, jo: usize) -> Vec<usize> {
        decode_joint(jo, &self.observations)
    }

    /// Probability of observing `jo` after taking `ja` in belief `b`, and
    /// the posterior belief. `None` posterior means the observation has zero
    /// probability and the branch is unreachable.
    pub fn belief_update(&self, b: &[f64], ja: usize, jo: usize) -> (f64, Option<Vec<f64>>) {
        let s_count = self.num_states;
        let jo_count = self.num_joint_observations();
        let t = &self.transition[ja];
        let z = &self.observation[ja];
        let mut next = vec![0.0; s_count];
        let mut prob = 0.0;
        for s in 0..s_count {
            if b[s] == 0.0 {
                continue;
            }
            let row = &t[s * s_count..(s + 1) * s_count];
            for (sp, &p) in row.iter().enumerate() {
                if p != 0.0 {
                    next[sp] += b[s] * p * z[sp * jo_count + jo];
                }
            }
        }
        for v in &next {
            prob += v;
        }
        if prob <= 0.0 {
            return (0.0, None);
        }
        for v in &mut next {
            *v /= prob;
        }
        (prob, Some(next))
    }

    /// Expected immediate reward of joint action `ja` in belief `b`.
    pub fn expected_reward(&self, b: &[f64], ja: usize) -> f64 {
        b.iter().zip(&self.reward[ja]).map(|(x, r)| x * r).sum()
    }

    /// A copy of the model with all agents merged into one whose actions and
    /// observations are the joint ones. Used for centralized relaxations.
    pub fn centralized(&self) -> DecPomdp {
        DecPomdp {
            num_agents: 1,
            num_states: self.num_states,
            actions: vec![self.num_joint_actions()],
            observations: vec![self.num_joint_observations()],
            transition: self.transition.clone(),
            observation: self.observation.clone(),
            reward: self.reward.clone(),
            start: self.start.clone(),
        }
    }
}

const PROB_TOL: f64 = 1e-9;

/// Checks every model invariant and returns all violations found.
pub fn validate_model(m: &DecPomdp) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |location: String, message: String| {
        out.push(Violation { location, message });
    };

    if m.num_agents == 0 {
        push("agents".into(), "at least one agent required".into());
    }
    if m.num_states == 0 {
        push("states".into(), "at least one state required".into());
    }
    for (i, &a) in m.actions.iter().enumerate() {
        if a == 0 {
            push(format!("actions[{i}]"), "agent has no actions".into());
        }
    }
    for (i, &o) in m.observations.iter().enumerate() {
        if o == 0 {
            push(format!("observations[{i}]"), "agent has no observations".into());
        }
    }

    let sum: f64 = m.start.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        push("start".into(), format!("belief sum {} must be 1", sum));
    }
    for (s, &p) in m.start.iter().enumerate() {
        if !(0.0..=1.0).contains(&p) {
            push(format!("start[{s}]"), format!("probability {} outside [0, 1]", p));
        }
    }

    let s_count = m.num_states;
    let jo_count = m.num_joint_observations();
    for (ja, t) in m.transition.iter().enumerate() {
        for s in 0..s_count {
            let row = &t[s * s_count..(s + 1) * s_count];
            let sum: f64 = row.iter().sum();
            if sum == 0.0 {
                push(
                    format!("T[{ja}][{s}]"),
                    "transition row is entirely unspecified".into(),
                );
            } else if (sum - 1.0).abs() > PROB_TOL {
                push(format!("T[{ja}][{s}]"), format!("row sum {} must be 1", sum));
            }
            for (sp, &p) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) {
                    push(
                        format!("T[{ja}][{s}][{sp}]"),
                        format!("probability {} outside [0, 1]", p),
                    );
                }
            }
        }
    }
    for (ja, z) in m.observation.iter().enumerate() {
        for sp in 0..s_count {
            let row = &z[sp * jo_count..(sp + 1) * jo_count];
            let sum: f64 = row.iter().sum();
            if sum == 0.0 {
                push(
                    format!("O[{ja}][{sp}]"),
                    "observation row is entirely unspecified".into(),
                );
            } else if (sum - 1.0).abs() > PROB_TOL {
                push(format!("O[{ja}][{sp}]"), format!("row sum {} must be 1", sum));
            }
            for (jo, &p) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) {
                    push(
                        format!("O[{ja}][{sp}][{jo}]"),
                        format!("probability {} outside [0, 1]", p),
                    );
                }
            }
        }
    }
    out
}

/// Parses an instance file and validates the result.
///
/// Grammar (UTF-8 text, `#` comments to end of line, one directive per
/// line, header lines in the order shown):
///
/// ```text
/// agents: <n>
/// states: <S>
/// actions: <A_0> ... <A_{n-1}>
/// observations: <O_0> ... <O_{n-1}>
/// start: <b0[0]> ... <b0[S-1]>
/// T: <ja> <s> <s'> <p>     # repeatable
/// O: <ja> <s'> <jo> <p>    # repeatable
/// R: <ja> <s> <r>          # repeatable
/// ```
///
/// Unspecified probability entries default to 0 (rows left entirely
/// unspecified are a validation error); unspecified rewards default to 0.
pub fn parse_model(text: &str) -> Result<DecPomdp, Error> {
    Parser::new(text).parse()
}

struct Parser<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

/// One whitespace-separated token with its 1-based column.
type Token<'a> = (usize, &'a str);

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, raw)| {
                let body = raw.split('#').next().unwrap_or("");
                (i + 1, body)
            })
            .filter(|(_, body)| !body.trim().is_empty())
            .collect();
        Parser { lines, pos: 0 }
    }

    fn tokenize(line: &str) -> Vec<Token<'_>> {
        let mut out = Vec::new();
        let mut start = None;
        for (i, ch) in line.char_indices() {
            if ch.is_whitespace() {
                if let Some(s) = start.take() {
                    out.push((s + 1, &line[s..i]));
                }
            } else if start.is_none() {
                start = Some(i);
            }
        }
        if let Some(s) = start {
            out.push((s + 1, &line[s..]));
        }
        out
    }

    fn err(line: usize, column: usize, message: impl Into<String>) -> Error {
        Error::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn next_line(&mut self) -> Option<(usize, Vec<Token<'a>>)> {
        let (no, body) = *self.lines.get(self.pos)?;
        self.pos += 1;
        Some((no, Self::tokenize(body)))
    }

    /// Reads a header line `<keyword>: v1 v2 ...` and returns the values.
    fn header(&mut self, keyword: &str) -> Result<(usize, Vec<Token<'a>>), Error> {
        match self.next_line() {
            None => Err(Self::err(
                self.lines.last().map_or(1, |(n, _)| *n),
                1,
                format!("expected `{keyword}:` line before end of file"),
            )),
            Some((no, tokens)) => {
                let (col, head) = tokens[0];
                if head != format!("{keyword}:") {
                    return Err(Self::err(
                        no,
                        col,
                        format!("expected `{keyword}:`, found `{head}`"),
                    ));
                }
                Ok((no, tokens[1..].to_vec()))
            }
        }
    }

    fn parse(mut self) -> Result<DecPomdp, Error> {
        let num_agents = parse_one::<usize>(self.header("agents")?, "agent count")?;
        let num_states = parse_one::<usize>(self.header("states")?, "state count")?;
        let (no, toks) = self.header("actions")?;
        let actions = parse_counted::<usize>(no, toks, num_agents, "action count")?;
        let (no, toks) = self.header("observations")?;
        let observations = parse_counted::<usize>(no, toks, num_agents, "observation count")?;
        let (no, toks) = self.header("start")?;
        let start = parse_counted::<f64>(no, toks, num_states, "start probability")?;

        let ja_count = actions.iter().product::<usize>();
        let jo_count = observations.iter().product::<usize>();
        let mut m = DecPomdp {
            num_agents,
            num_states,
            actions,
            observations,
            transition: vec![vec![0.0; num_states * num_states]; ja_count],
            observation: vec![vec![0.0; num_states * jo_count]; ja_count],
            reward: vec![vec![0.0; num_states]; ja_count],
            start,
        };
        let mut seen_t = vec![false; ja_count * num_states * num_states];
        let mut seen_o = vec![false; ja_count * num_states * jo_count];
        let mut seen_r = vec![false; ja_count * num_states];

        while let Some((no, tokens)) = self.next_line() {
            let (col, head) = tokens[0];
            let rest = &tokens[1..];
            match head {
                "T:" => {
                    let [ja, s, sp] = parse_indices(
                        no,
                        rest,
                        [("joint action", ja_count), ("state", num_states), ("state", num_states)],
                    )?;
                    expect_len(no, col, rest, 4, "T: <ja> <s> <s'> <p>")?;
                    let p = parse_at::<f64>(no, rest[3], "probability")?;
                    let key = (ja * num_states + s) * num_states + sp;
                    if seen_t[key] {
                        return Err(Self::err(
                            no,
                            col,
                            format!("duplicate T entry for ({ja}, {s}, {sp})"),
                        ));
                    }
                    seen_t[key] = true;
                    m.transition[ja][s * num_states + sp] = p;
                }
                "O:" => {
                    let [ja, sp, jo] = parse_indices(
                        no,
                        rest,
                        [
                            ("joint action", ja_count),
                            ("state", num_states),
                            ("joint observation", jo_count),
                        ],
                    )?;
                    expect_len(no, col, rest, 4, "O: <ja> <s'> <jo> <p>")?;
                    let p = parse_at::<f64>(no, rest[3], "probability")?;
                    let key = (ja * num_states + sp) * jo_count + jo;
                    if seen_o[key] {
                        return Err(Self::err(
                            no,
                            col,
                            format!("duplicate O entry for ({ja}, {sp}, {jo})"),
                        ));
                    }
                    seen_o[key] = true;
                    m.observation[ja][sp * jo_count + jo] = p;
                }
                "R:" => {
                    let [ja, s] = parse_indices(
                        no,
                        rest,
                        [("joint action", ja_count), ("state", num_states)],
                    )?;
                    expect_len(no, col, rest, 3, "R: <ja> <s> <r>")?;
                    let r = parse_at::<f64>(no, rest[2], "reward")?;
                    let key = ja * num_states + s;
                    if seen_r[key] {
                        return Err(Self::err(
                            no,
                            col,
                            format!("duplicate R entry for ({ja}, {s})"),
                        ));
                    }
                    seen_r[key] = true;
                    m.reward[ja][s] = r;
                }
                other => {
                    return Err(Self::err(
                        no,
                        col,
                        format!("expected `T:`, `O:`, or `R:`, found `{other}`"),
                    ));
                }
            }
        }

        let violations = validate_model(&m);
        if violations.is_empty() {
            Ok(m)
        } else {
            Err(Error::InvalidModel(violations))
        }
    }
}

fn parse_at<T: std::str::FromStr>(line: usize, token: Token<'_>, what: &str) -> Result<T, Error> {
    token.1.parse().map_err(|_| Parser::err(
        line,
        token.0,
        format!("cannot parse `{}` as {}", token.1, what),
    ))
}

fn parse_one<T: std::str::FromStr>(
    (line, tokens): (usize, Vec<Token<'_>>),
    what: &str,
) -> Result<T, Error> {
    if tokens.len() != 1 {
        return Err(Parser::err(
            line,
            tokens.first().map_or(1, |t| t.0),
            format!("expected exactly one {what}"),
        ));
    }
    parse_at(line, tokens[0], what)
}

fn parse_counted<T: std::str::FromStr>(
    line: usize,
    tokens: Vec<Token<'_>>,
    count: usize,
    what: &str,
) -> Result<Vec<T>, Error> {
    if tokens.len() != count {
        return Err(Parser::err(
            line,
            tokens.first().map_or(1, |t| t.0),
            format!("expected {count} values ({what}), found {}", tokens.len()),
        ));
    }
    tokens.into_iter().map(|t| parse_at(line, t, what)).collect()
}

fn parse_indices<const N: usize>(
    line: usize,
    tokens: &[Token<'_>],
    specs: [(&str, usize); N],
) -> Result<[usize; N], Error> {
    let mut out = [0usize; N];
    for (i, (what, limit)) in specs.iter().enumerate() {
        let token = tokens.get(i).ok_or_else(|| {
            Parser::err(line, 1, format!("missing {what} index"))
        })?;
        let v: usize = parse_at(line, *token, what)?;
        if v >= *limit {
            return Err(Parser::err(
                line,
                token.0,
                format!("{what} index {v} out of range (limit {limit})"),
            ));
        }
        out[i] = v;
    }
    Ok(out)
}

fn expect_len(
    line: usize,
    col: usize,
    rest: &[Token<'_>],
    want: usize,
    shape: &str,
) -> Result<(), Error> {
    if rest.len() != want {
        return Err(Parser::err(
            line,
            rest.get(want).map_or(col, |t| t.0),
            format!("expected `{shape}`"),
        ));
    }
    Ok(())
}
