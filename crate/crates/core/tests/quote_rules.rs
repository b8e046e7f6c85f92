//! Hand-written scaffold fixtures for every built-in quote rule.

use clipseek::classifier::{rule_label, QueryLabel, QuoteRuleSet};

const SAID_COMMA_QUOTE: &[&str] = &[
    "She said, \"I will never give up\"",
    "He said \"the harbour stays open\"",
    "The mayor says, \"we rebuild the bridge\"",
    "My grandmother asked, \"where is the tram?\"",
    "The teacher replied, \"not before nine\"",
    "Then the captain added, \"hold the line\"",
    "The curator explained, “this is the oldest reel”",
    "The official stated, \"no comment\"",
    "The king declared, \"the war is over\"",
    "In his diary he wrote, \"rain again today\"",
    "She exclaimed, \"what a goal!\"",
    "The farmer insisted, \"the orchard floods every spring\"",
    "The guide remarked, \"mind the step\"",
    "He recalled, \"we danced until dawn\"",
    "The minister told reporters, \"prices will fall\"",
    "She tells everyone, \"keep calm\"",
    "The striker SAID, \"we wanted it more\"",
    "a worker asks \"when do we get paid?\"",
    "the boy replies, \"because it is snowing\"",
    "Our neighbour writes, \"the choir sang beautifully\"",
    "The doctor states \"rest for a week\"",
];

const ACCORDING_TO: &[&str] = &[
    "According to the minister, taxes will fall next year",
    "according to witnesses the fire started at noon",
    "ACCORDING TO the report the dam held",
    "The tram was late, according to passengers",
    "According to   the forecast, snow is coming",
    "Prices rose sharply according to the bakers' guild",
    "According to my father the harbour was busier then",
    "The match was cancelled according to the club",
    "According to legend the bridge was built in a night",
    "According to police, nobody was hurt",
    "Crowds gathered early, according to the organisers",
    "According to the archive, this reel was lost",
    "The strike ended on Friday according to union leaders",
    "according to her the parade was the best ever",
    "According to official figures unemployment fell",
    "The ship sank quickly, according to survivors",
    "According to the programme the choir opens the show",
    "The orchard produced record apples according to growers",
    "According to the broadcaster the signal failed twice",
    "Turnout was high, according to the election office",
];

const COLON_QUOTE: &[&str] = &[
    "The coach was blunt: \"We played badly tonight\"",
    "Her answer was simple: \"no\"",
    "The headline read: \"Floods hit the valley\"",
    "He had one message:\"stay home\"",
    "The sign said it all: “closed for repairs”",
    "Minister: \"we will not resign\"",
    "The verdict:   \"guilty\"",
    "Her last words on air: \"good night and good luck\"",
    "The slogan was clear: \"bread and roses\"",
    "From the captain's log: \"calm seas\"",
    "The announcer: \"the train is delayed\"",
    "A note on the door: \"back in five minutes\"",
    "The crowd chanted: \"more, more\"",
    "Reporter: \"how do you feel?\"",
    "One viewer wrote in: \"bring back the old show\"",
    "Question of the day: \"who built the tower?\"",
    "The banner: “welcome home”",
    "His reply came fast: \"absolutely not\"",
    "The warning: \"keep away from the edge\"",
    "Two words from the referee: \"play on\"",
];

const BARE_QUOTED_SPAN: &[&str] = &[
    "\"nothing is impossible today\"",
    "\"we shall fight on the beaches\"",
    "“the eagle has landed”",
    "\"ask not what your country can do\"",
    "the famous line \"one small step for man\"",
    "\"I have a dream\" speech",
    "\"it's a long way home\"",
    "\"rain, rain, go away\"",
    "\"the lady's not for turning\"",
    "\"never again, never again\"",
    "\"this is the end\"",
    "\"we are the champions, my friends\"",
    "\"keep calm and carry on\"",
    "\"tear down this wall\"",
    "clip where someone shouts \"get off the pitch!\"",
    "\"let them eat cake\"",
    "\"peace for our time\"",
    "\"the show must go on\"",
    "“good evening, this is the news”",
    "\"all aboard the night train\"",
];

const QUOTE_ATTRIBUTION: &[&str] = &[
    "\"Go,\" she said",
    "\"Stop\" the officer said",
    "\"Yes,\" the mayor replied",
    "\"We won\", the captain declared",
    "\"Enough\" nobody said",
    "\"Later,\" my old friend added",
    "\"Why?\" the little girl asked",
    "\"Fine,\" he explained",
    "“Never” she insisted",
    "\"Gone,\" the fisherman recalled",
    "\"Hello\" the presenter says",
    "\"Closed\", the porter told him",
    "\"Tomorrow,\" they replied",
    "\"Ready\" the pilot states",
    "\"Home,\" the soldier wrote",
    "\"Beautiful,\" the visitor remarked",
    "\"No\" the minister declares",
    "\"Run!\" the boy exclaimed",
    "\"Later\", mother says",
    "\"Done,\" the builder tells us",
];

const VISUAL: &[&str] = &[
    "a man is riding a bicycle down a hill",
    "a red tram crosses a bridge in the snow",
    "children play football in a park",
    "aerial view of a harbour with cranes",
    "a choir stands on a stage",
    "farmers pick apples in an orchard",
    "a parade moves through the market square",
    "workers on strike hold banners outside a factory",
    "a woman reads a newspaper on a train",
    "a dog runs along the beach",
    "fireworks over the river at night",
    "a ship leaves the port in heavy rain",
    "close up of hands kneading bread",
    "a crowd waits at the station",
    "two boxers in a ring",
    "a flooded street with cars stuck in water",
    "an old woman feeds pigeons",
    "a band plays in a dance hall",
    "snow falls on rooftops",
    "a politician waves from a balcony",
    "",
];

fn check(rule: &str, fixtures: &[&str]) {
    let rules = QuoteRuleSet::standard();
    assert!(fixtures.len() >= 20);
    for s in fixtures {
        assert!(
            rules.matching_rules(s).contains(&rule),
            "{rule} should fire on {s:?}, matched {:?}",
            rules.matching_rules(s)
        );
        assert_eq!(rule_label(&rules, s), QueryLabel::QuoteSpeech, "{s:?}");
    }
}

#[test]
fn said_comma_quote() {
    check("said-comma-quote", SAID_COMMA_QUOTE);
}

#[test]
fn according_to() {
    check("according-to", ACCORDING_TO);
}

#[test]
fn colon_quote() {
    check("colon-quote", COLON_QUOTE);
}

#[test]
fn bare_quoted_span() {
    check("bare-quoted-span", BARE_QUOTED_SPAN);
}

#[test]
fn quote_attribution() {
    check("quote-attribution", QUOTE_ATTRIBUTION);
}

#[test]
fn captions_stay_visual() {
    let rules = QuoteRuleSet::standard();
    for s in VISUAL {
        assert_eq!(rules.label(s), QueryLabel::Visual, "{s:?} matched {:?}", rules.matching_rules(s));
    }
}

#[test]
fn short_quotes_alone_are_not_speech() {
    let rules = QuoteRuleSet::standard();
    for s in ["the \"Titanic\" leaves port", "a sign reading \"open\"", "the \"red army\" choir"] {
        assert_eq!(rules.label(s), QueryLabel::Visual, "{s:?}");
    }
}

#[test]
fn labelling_is_idempotent() {
    let rules = QuoteRuleSet::standard();
    let all = [SAID_COMMA_QUOTE, ACCORDING_TO, COLON_QUOTE, BARE_QUOTED_SPAN, QUOTE_ATTRIBUTION, VISUAL].concat();
    let first: Vec<QueryLabel> = all.iter().map(|s| rules.label(s)).collect();
    let second: Vec<QueryLabel> = all.iter().map(|s| rules.label(s)).collect();
    assert_eq!(first, second);
}

#[test]
fn canonical_scaffolds_are_required() {
    for s in QuoteRuleSet::CANONICAL_SCAFFOLDS {
        assert_eq!(QuoteRuleSet::standard().label(s), QueryLabel::QuoteSpeech);
    }
    let err = QuoteRuleSet::from_patterns(vec![("only-said", r"said")]).unwrap_err();
    assert!(err.to_string().contains("canonical scaffold"));
    assert!(QuoteRuleSet::from_patterns(vec![("broken", r"(")]).is_err());
}
