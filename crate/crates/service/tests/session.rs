mod common;

use common::{keys, models};
use tapfuse::decoder::{beam_decode_with_context, DecoderConfig};
use tapfuse::simulator::NoiseProfile;
use tapfuse::Gaussian2;
use tapfuse::Mat2;
use tapfuse_service::session::Key;
use tapfuse_service::{ClientMessage, CreateSession, Ellipse, ErrorKind, Session};

fn noiseless() -> CreateSession {
    CreateSession {
        noise_profile: NoiseProfile::noiseless(),
        ..Default::default()
    }
}

fn run(session: &mut Session, script: &str) -> Vec<String> {
    keys(script)
        .iter()
        .map(|m| serde_json::to_string(&session.handle(m).unwrap()).unwrap())
        .collect()
}

#[test]
fn noiseless_word_commits_with_space() {
    let mut s = Session::new("a".into(), models(), noiseless()).unwrap();
    let replies = run(&mut s, "cat ");
    assert_eq!(replies.len(), 4);
    assert_eq!(s.decoder().state().committed, "cat ");
    let last: serde_json::Value = serde_json::from_str(&replies[3]).unwrap();
    assert_eq!(last["committed"], "cat ");
    assert_eq!(last["seq"], 4);
    assert!(last["observation_ellipse"].is_null());
}

#[test]
fn character_replies_carry_top_keys_and_ellipse() {
    let mut s = Session::new("a".into(), models(), CreateSession { seed: 3, ..Default::default() }).unwrap();
    let r = s.handle(&keys("g")[0]).unwrap();
    assert_eq!(r.per_key_loglik.len(), 5);
    assert!(r.per_key_loglik.windows(2).all(|w| w[0].loglik >= w[1].loglik));
    let e = r.observation_ellipse.unwrap();
    assert!(e.radii[0] >= e.radii[1] && e.radii[1] > 0.0);
}

#[test]
fn ellipse_of_a_rotated_gaussian() {
    // Covariance with eigenvalues 9 and 1 along the diagonals.
    let g = Gaussian2::new([1.0, 2.0], Mat2([[5.0, 4.0], [4.0, 5.0]])).unwrap();
    let e = Ellipse::of(&g);
    assert!((e.radii[0] - 3.0).abs() < 1e-12 && (e.radii[1] - 1.0).abs() < 1e-12);
    assert!((e.angle - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    assert_eq!(e.center, [1.0, 2.0]);
}

#[test]
fn same_seed_and_script_replay_identically() {
    let req = CreateSession { seed: 99, ..Default::default() };
    let script = "the quick brown< fox| jumps ";
    let mut a = Session::new("a".into(), models(), req.clone()).unwrap();
    let mut b = Session::new("b".into(), models(), req).unwrap();
    assert_eq!(run(&mut a, script), run(&mut b, script));
    let mut c = Session::new("c".into(), models(), CreateSession { seed: 100, ..Default::default() }).unwrap();
    let other = run(&mut c, script);
    assert_ne!(run(&mut a, "x"), other[..1].to_vec());
}

#[test]
fn suggestion_matches_batch_beam_on_the_same_observations() {
    let profile = NoiseProfile::default().scaled_sensing(1.4);
    let mut s = Session::new(
        "a".into(),
        models(),
        CreateSession { noise_profile: profile, seed: 5, ..Default::default() },
    )
    .unwrap();
    run(&mut s, "the ");
    for word in ["experience", "quickly", "favorite"] {
        for m in keys(word) {
            s.handle(&m).unwrap();
            let obs = s.decoder().word_observations().to_vec();
            let context = s.decoder().state().committed.clone();
            let batch = beam_decode_with_context(&obs, &models(), &DecoderConfig::default(), &context, false).unwrap();
            assert_eq!(s.decoder().state().suggestion, batch[0].text);
        }
        s.handle(&keys(" ")[0]).unwrap();
    }
}

#[test]
fn backspace_and_literal_commit() {
    let mut s = Session::new("a".into(), models(), noiseless()).unwrap();
    run(&mut s, "cax<t|");
    assert_eq!(s.decoder().state().committed, "cat ");
    let m = s.metrics();
    assert_eq!((m.keystrokes, m.backspaces), (6, 1));
}

#[test]
fn metrics_track_the_target() {
    let req = CreateSession { target: Some("the cat".into()), ..noiseless() };
    let mut s = Session::new("a".into(), models(), req).unwrap();
    let m = s.metrics();
    assert_eq!((m.keystrokes, m.backspaces), (0, 0));
    assert!(m.stats.is_none());
    run(&mut s, "thr<e cat ");
    let stats = s.metrics().stats.unwrap();
    assert_eq!(stats.incorrect_not_fixed, 0);
    assert_eq!(stats.incorrect_fixed, 1);
    assert_eq!(stats.correct, 7);
    // Ten keystrokes span 2250 ms; the transcript scored is "the cat" (7).
    let wpm = stats.wpm.unwrap();
    assert!((wpm - (6.0 / 5.0) / (2250.0 / 60_000.0)).abs() < 1e-9);
}

#[test]
fn invalid_requests_name_the_field() {
    let bad = CreateSession {
        decoder: DecoderConfig { beam_width: 0, ..Default::default() },
        ..Default::default()
    };
    let err = Session::new("a".into(), models(), bad).err().unwrap();
    assert_eq!(err.kind, ErrorKind::BadRequest);
    assert_eq!(err.field.as_deref(), Some("decoder.beam_width"));

    let mut s = Session::new("a".into(), models(), noiseless()).unwrap();
    let msg = ClientMessage { v: Some(1), keydown: "shift".into(), client_time: 0.0 };
    assert_eq!(s.handle(&msg).unwrap_err().field.as_deref(), Some("keydown"));
    let msg = ClientMessage { v: Some(2), keydown: "a".into(), client_time: 0.0 };
    assert_eq!(s.handle(&msg).unwrap_err().field.as_deref(), Some("v"));
    let msg = ClientMessage { v: None, keydown: "A".into(), client_time: 0.0 };
    assert!(s.handle(&msg).is_err());
}

#[test]
fn key_names() {
    assert_eq!(Key::parse("space").unwrap(), Key::Space);
    assert_eq!(Key::parse(" ").unwrap(), Key::Space);
    assert_eq!(Key::parse("backspace").unwrap(), Key::Backspace);
    assert_eq!(Key::parse("commit_literal").unwrap(), Key::CommitLiteral);
    assert_eq!(Key::parse("q").unwrap(), Key::Char('q'));
    assert!(Key::parse("").is_err());
}
