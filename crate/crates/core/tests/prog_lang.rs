use num_traits::ToPrimitive;
use proptest::prelude::*;
use refinery_core::prog_lang::*;
use refinery_core::spec_lang::{
    eval_bool, eval_spec, parse_spec_expr_untyped, ArithOp, Rational, Valuation, Value,
};

const SQRT: &str = "\
x = 0
y = N+1
while y > x+e:
    if (x+y)/2*(x+y)/2 > N:
        y = (x+y)/2
    else:
        x = (x+y)/2
";

const NEWTON_WITH_ASSERTS: &str = "\
x = N
assert x * x > N
while x * x > N:
    assert x != (x + N/x) / 2
    x = (x + N/x) / 2
";

fn bindings(text: &str) -> Valuation {
    Valuation::parse_bindings(text).unwrap()
}

#[test]
fn pass_round_trips() {
    assert_eq!(parse_program("pass").unwrap(), Statement::Pass);
    assert_eq!(render_program(&Statement::Pass), "pass\n");
}

#[test]
fn sqrt_program_shape() {
    let p = parse_program(SQRT).unwrap();
    let Statement::Seq(items) = &p else { panic!("expected a sequence") };
    assert_eq!(items.len(), 3);
    let Statement::While { cond, body } = &items[2] else { panic!("expected a loop") };
    assert_eq!(render_prog_expr(cond), "y > x+e");
    let Statement::If { then_branch, else_branch, .. } = &**body else { panic!("expected if") };
    assert!(matches!(**then_branch, Statement::Assign { .. }));
    assert!(matches!(**else_branch, Statement::Assign { .. }));
    assert_eq!(render_program(&p), SQRT);
}

#[test]
fn assert_statement_parses() {
    let p = parse_program("assert x != (x + N/x) / 2").unwrap();
    let Statement::Assert(e) = p else { panic!("expected assert") };
    assert_eq!(render_prog_expr(&e), "x != (x+N/x)/2");
}

#[test]
fn syntax_errors_carry_positions() {
    let e = parse_program("x = 1\nwhile x > 0\n    x = x - 1\n").unwrap_err();
    assert_eq!(e.line, 2);
    let e = parse_program("x = 1\n  y = 2\n").unwrap_err();
    assert_eq!((e.line, e.col), (2, 3));
    let e = parse_program("x = (1 + \n").unwrap_err();
    assert_eq!(e.line, 1);
}

#[test]
fn comments_and_missing_else() {
    let p = parse_program("# header\nif x > 0:  // positive\n    y = 1\n").unwrap();
    let Statement::If { else_branch, .. } = p else { panic!() };
    assert_eq!(*else_branch, Statement::Pass);
}

#[test]
fn sqrt_at_four() {
    let p = parse_program(SQRT).unwrap();
    let out = interpret(&p, &bindings("N = 4, e = 1/2"), DEFAULT_STEP_LIMIT, NumMode::Rational).unwrap();
    assert_eq!(out.status, RunStatus::Completed);
    // hand simulation of the bisection: (0,5) (0,5/2) (5/4,5/2) (15/8,5/2) (15/8,35/16)
    assert_eq!(out.state.get("x"), Some(&Value::Num(Rational::new(15.into(), 8.into()))));
    assert_eq!(out.state.get("y"), Some(&Value::Num(Rational::new(35.into(), 16.into()))));
    let post = parse_spec_expr_untyped("x*x <= N /\\ N < y*y /\\ y <= x+e").unwrap();
    assert!(eval_bool(&post, &out.state, &out.state, &NoCarriers).unwrap());
}

#[test]
fn newton_fixed_point_in_binary64() {
    let p = parse_program(NEWTON_WITH_ASSERTS).unwrap();
    let out = interpret(&p, &bindings("N = 5"), DEFAULT_STEP_LIMIT, NumMode::Binary64).unwrap();
    let RunStatus::AssertFailed { location, state } = &out.status else {
        panic!("expected an assertion failure, got {:?}", out.status)
    };
    assert_eq!(location, "assert x != (x+N/x)/2");
    let x = state.get("x").unwrap().as_num().unwrap().to_f64().unwrap();
    let n = 5.0f64;
    assert!(x * x > n);
    assert_eq!(x, (x + n / x) / 2.0);
    // exact arithmetic never reaches a fixed point, so the loop runs to the step limit
    let out = interpret(&p, &bindings("N = 5"), 30, NumMode::Rational).unwrap();
    assert_eq!(out.status, RunStatus::StepLimit);
}

#[test]
fn buggy_initialisation_fails_below_one() {
    let buggy = SQRT.replace("y = N+1", "y = N");
    let p = parse_program(&buggy).unwrap();
    let cases = parse_test_cases("input: N = 1/2, e = 1/2\ncheck: x*x <= N /\\ N < y*y /\\ y <= x+e\n").unwrap();
    let report = run_tests(&p, &cases, DEFAULT_STEP_LIMIT, NumMode::Rational);
    assert_eq!(report.passed(), 0);
    let good = parse_program(SQRT).unwrap();
    assert!(run_tests(&good, &cases, DEFAULT_STEP_LIMIT, NumMode::Rational).all_passed());
}

#[test]
fn sqrt_five_cases() {
    let mut text = String::new();
    for n in ["0", "1/2", "1", "2", "4"] {
        text.push_str(&format!("input: N = {n}, e = 1/2\ncheck: x*x <= N /\\ N < y*y /\\ y <= x+e\n\n"));
    }
    let cases = parse_test_cases(&text).unwrap();
    let report = run_tests(&parse_program(SQRT).unwrap(), &cases, DEFAULT_STEP_LIMIT, NumMode::Rational);
    assert_eq!((report.passed(), report.total()), (5, 5));
}

struct NoCarriers;

impl refinery_core::spec_lang::Carriers for NoCarriers {
    fn carrier(&self, name: &str, _: &refinery_core::spec_lang::SpecType) -> Result<Vec<Value>, String> {
        Err(format!("no carrier for {name}"))
    }
}

const NAMES: [&str; 4] = ["x", "y", "z", "N"];

fn literal() -> impl Strategy<Value = ProgExpr> {
    prop_oneof![
        (0i64..20).prop_map(ProgExpr::int),
        (0i64..100).prop_map(|k| ProgExpr::Num(Rational::new(k.into(), 4.into()))),
    ]
}

fn term() -> impl Strategy<Value = ProgExpr> {
    let leaf = prop_oneof![literal(), prop::sample::select(&NAMES[..]).prop_map(ProgExpr::name)];
    leaf.prop_recursive(3, 16, 2, |inner| {
        (
            prop::sample::select(vec![ArithOp::Add, ArithOp::Sub, ArithOp::Mul]),
            inner.clone(),
            inner,
        )
            .prop_map(|(op, a, b)| ProgExpr::arith(op, a, b))
    })
}

fn cmp_op() -> impl Strategy<Value = CmpOp> {
    prop::sample::select(vec![CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge])
}

fn formula() -> impl Strategy<Value = ProgExpr> {
    let atom = prop_oneof![
        (cmp_op(), term(), term()).prop_map(|(op, a, b)| ProgExpr::cmp(op, a, b)),
        any::<bool>().prop_map(ProgExpr::Bool),
    ];
    atom.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| ProgExpr::And(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| ProgExpr::Or(Box::new(a), Box::new(b))),
            inner.prop_map(|a| ProgExpr::Not(Box::new(a))),
        ]
    })
}

fn any_expr() -> impl Strategy<Value = ProgExpr> {
    prop_oneof![
        term(),
        formula(),
        (prop::sample::select(&["a", "b"][..]), term()).prop_map(|(n, i)| ProgExpr::Index(n.into(), Box::new(i))),
        (prop::sample::select(&["a", "b"][..]), term(), term())
            .prop_map(|(n, i, j)| ProgExpr::Slice(n.into(), Box::new(i), Box::new(j))),
        (term(), term()).prop_map(|(a, b)| ProgExpr::arith(ArithOp::Div, a, b)),
    ]
}

fn statement() -> impl Strategy<Value = Statement> {
    let leaf = prop_oneof![
        Just(Statement::Pass),
        (prop::sample::select(&NAMES[..3]), any_expr()).prop_map(|(n, e)| Statement::assign(n, e)),
        (term(), term()).prop_map(|(i, e)| Statement::Assign { target: Target::Index("a".into(), i), value: e }),
        formula().prop_map(Statement::Assert),
        prop::collection::vec(term(), 0..3).prop_map(|args| Statement::Call { name: "f".into(), args }),
    ];
    leaf.prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Statement::seq),
            (formula(), inner.clone()).prop_map(|(c, b)| Statement::While { cond: c, body: Box::new(b) }),
            (formula(), inner.clone(), inner.clone()).prop_map(|(c, t, e)| Statement::If {
                cond: c,
                then_branch: Box::new(t),
                else_branch: Box::new(e),
            }),
            inner.prop_map(|b| Statement::ProcDef {
                name: "g".into(),
                params: vec![("k".into(), refinery_core::spec_lang::SpecType::Int)],
                body: Box::new(b),
            }),
        ]
    })
}

proptest! {
    #[test]
    fn expr_round_trip(e in any_expr()) {
        let text = render_prog_expr(&e);
        prop_assert_eq!(parse_prog_expr(&text).unwrap(), e, "{}", text);
    }

    #[test]
    fn program_round_trip(s in statement()) {
        let s = s.normalize();
        let text = render_program(&s);
        prop_assert_eq!(parse_program(&text).unwrap(), s, "{}", text);
    }

    #[test]
    fn interpreter_agrees_with_formula_evaluation(
        e in prop_oneof![term(), formula()],
        x in -5i64..5, y in -5i64..5, z in 0i64..4, n in 0i64..9,
    ) {
        let state = bindings(&format!("x = {x}, y = {y}, z = {z}, N = {n}/2"));
        let p = Statement::assign("r", e.clone());
        let out = interpret(&p, &state, 10, NumMode::Rational).unwrap();
        let spec = eval_spec(&prog_expr_to_spec(&e), &state, &state, &NoCarriers).unwrap();
        prop_assert_eq!(out.state.get("r"), Some(&spec));
    }

    #[test]
    fn interpreter_is_deterministic(s in statement(), x in -3i64..3) {
        let input = bindings(&format!("x = {x}, y = 1, z = 2, N = 3, a = [1, 2, 3], b = [0]"));
        let first = interpret(&s, &input, 500, NumMode::Rational);
        let second = interpret(&s, &input, 500, NumMode::Rational);
        prop_assert_eq!(first, second);
    }

    #[test]
    fn failed_assert_halts(x in 0i64..10) {
        let p = parse_program("assert x < 5\ny = 1").unwrap();
        let out = interpret(&p, &bindings(&format!("x = {x}")), 10, NumMode::Rational).unwrap();
        if x < 5 {
            prop_assert_eq!(out.status, RunStatus::Completed);
        } else {
            let failed = matches!(out.status, RunStatus::AssertFailed { .. });
            prop_assert!(failed);
            prop_assert!(out.state.get("y").is_none());
        }
    }
}
