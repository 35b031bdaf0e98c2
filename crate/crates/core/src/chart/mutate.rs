use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use super::data::apply_table;
use super::geometry::{plan, text_width, ANNOTATION_FONT};
use super::{
    extract_fenced_table, spec_to_table, Annotation, ChartError, ChartSeed, ChartSpec, ChartType, DataTable,
    LegendPosition, Locale,
};
use crate::gateway::{extract_json_fence, ChatRequest, Gateway};
use crate::normalize::{format_number, parse_number};
use crate::prompts::{fill, CHART_MUTATION};

/// Maps visible chart text into a target locale.
pub trait Translator: Send + Sync {
    fn translate(&self, text: &str, target: Locale) -> Result<String, ChartError>;
}

const BUILTIN_ZH: &[(&str, &str)] = &[
    ("Jan", "一月"),
    ("Feb", "二月"),
    ("Mar", "三月"),
    ("Apr", "四月"),
    ("May", "五月"),
    ("Jun", "六月"),
    ("Jul", "七月"),
    ("Aug", "八月"),
    ("Sep", "九月"),
    ("Oct", "十月"),
    ("Nov", "十一月"),
    ("Dec", "十二月"),
    ("Q1", "第一季度"),
    ("Q2", "第二季度"),
    ("Q3", "第三季度"),
    ("Q4", "第四季度"),
    ("Mon", "周一"),
    ("Tue", "周二"),
    ("Wed", "周三"),
    ("Thu", "周四"),
    ("Fri", "周五"),
    ("Sat", "周六"),
    ("Sun", "周日"),
    ("Month", "月份"),
    ("Quarter", "季度"),
    ("Year", "年份"),
    ("Day", "日期"),
    ("Region", "地区"),
    ("City", "城市"),
    ("Product", "产品"),
    ("Category", "类别"),
    ("Group", "组别"),
    ("Sales", "销售额"),
    ("Revenue", "营收"),
    ("Profit", "利润"),
    ("Cost", "成本"),
    ("Visitors", "访客量"),
    ("Users", "用户数"),
    ("Orders", "订单量"),
    ("Count", "数量"),
    ("Value", "数值"),
    ("Score", "得分"),
    ("Share", "占比"),
    ("Frequency", "频数"),
    ("Population", "人口"),
    ("Hours", "小时数"),
    ("Price", "价格"),
    ("Growth", "增长率"),
    ("North", "北区"),
    ("South", "南区"),
    ("East", "东区"),
    ("West", "西区"),
    ("Online", "线上"),
    ("Offline", "线下"),
    ("Peak", "峰值"),
    ("Max", "最大值"),
    ("Art & Design", "艺术与设计"),
    ("Science & Nature", "科学与自然"),
    ("Business & Finance", "商业与金融"),
    ("Education", "教育"),
    ("Sports & Entertainment", "体育与娱乐"),
    ("Technology & Innovation", "科技与创新"),
    ("Health & Medicine", "健康与医疗"),
    ("Travel & Tourism", "旅游出行"),
    ("Monthly", "月度"),
    ("Quarterly", "季度"),
    ("Annual", "年度"),
    ("Weekly", "每周"),
    ("Overview", "概览"),
    ("Distribution", "分布"),
    ("Trend", "趋势"),
    ("Comparison", "对比"),
    ("by", "按"),
];

/// Dictionary-backed translator. Whole strings are looked up first, then
/// word by word; text that cannot be fully translated is returned unchanged.
#[derive(Debug, Clone, Default)]
pub struct DictionaryTranslator {
    to_zh: HashMap<String, String>,
    to_en: HashMap<String, String>,
}

impl DictionaryTranslator {
    pub fn builtin() -> Self {
        let mut t = Self::default();
        for (en, zh) in BUILTIN_ZH {
            t.insert(en, zh);
        }
        t
    }

    pub fn insert(&mut self, en: &str, zh: &str) {
        self.to_zh.insert(en.to_lowercase(), zh.to_string());
        self.to_en.insert(zh.to_string(), en.to_string());
    }

    fn lookup(&self, text: &str, target: Locale) -> Option<String> {
        match target {
            Locale::Zh => self.to_zh.get(&text.to_lowercase()).cloned(),
            Locale::En => self.to_en.get(text).cloned(),
        }
    }
}

impl Translator for DictionaryTranslator {
    fn translate(&self, text: &str, target: Locale) -> Result<String, ChartError> {
        let t = text.trim();
        if t.is_empty() || parse_number(t).is_some() {
            return Ok(text.to_string());
        }
        if let Some(hit) = self.lookup(t, target) {
            return Ok(hit);
        }
        if target == Locale::Zh {
            let words: Option<Vec<String>> = t.split_whitespace().map(|w| self.lookup(w, target)).collect();
            if let Some(words) = words {
                return Ok(words.concat());
            }
        }
        Ok(text.to_string())
    }
}

/// Model-backed translator for live runs.
pub struct LlmTranslator<'a> {
    pub gateway: &'a Gateway,
}

impl Translator for LlmTranslator<'_> {
    fn translate(&self, text: &str, target: Locale) -> Result<String, ChartError> {
        if text.trim().is_empty() || parse_number(text).is_some() {
            return Ok(text.to_string());
        }
        let language = match target {
            Locale::Zh => "Chinese",
            Locale::En => "English",
        };
        let prompt = format!(
            "Translate the following chart text into {language}. Keep numbers, units and symbols unchanged. \
             Reply with the translation only.\n\n{text}"
        );
        let reply = self.gateway.complete(&ChatRequest::new("chart-translate", prompt))?;
        let out = reply.text.trim().trim_matches(['"', '“', '”', '`']).trim().to_string();
        if out.is_empty() {
            return Err(ChartError::Translation(format!("empty translation for {text:?}")));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicPool {
    topics: Vec<String>,
}

impl Default for TopicPool {
    fn default() -> Self {
        Self { topics: vec!["Art & Design".into(), "Science & Nature".into()] }
    }
}

impl TopicPool {
    /// The default pair plus `extra`, without duplicates.
    pub fn with_extra<I: IntoIterator<Item = String>>(extra: I) -> Self {
        let mut pool = Self::default();
        for t in extra {
            let t = t.trim().to_string();
            if !t.is_empty() && !pool.topics.contains(&t) {
                pool.topics.push(t);
            }
        }
        pool
    }

    pub fn topics(&self) -> &[String] {
        &self.topics
    }
}

pub enum MutationRoute<'a> {
    RuleBased { translator: &'a dyn Translator, locale: Locale },
    Llm { gateway: &'a Gateway },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mutation {
    pub spec: ChartSpec,
    /// Data table whose values equal the spec's series exactly.
    pub table: DataTable,
}

fn seeded_rng(seed_id: &str, rng_seed: u64) -> ChaCha8Rng {
    let digest = Sha256::digest(seed_id.as_bytes());
    let mut id_bits = [0u8; 8];
    id_bits.copy_from_slice(&digest[..8]);
    ChaCha8Rng::seed_from_u64(rng_seed ^ u64::from_le_bytes(id_bits))
}

fn decimals(v: f64) -> i32 {
    (0..=2).find(|d| {
        let s = 10f64.powi(*d);
        ((v * s).round() - v * s).abs() < 1e-9
    })
    .unwrap_or(2)
}

fn round_to(v: f64, d: i32) -> f64 {
    let s = 10f64.powi(d);
    (v * s).round() / s
}

fn hsl_hex(h: f64, s: f64, l: f64) -> String {
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let hp = (h % 360.0) / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    let to = |v: f64| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    format!("#{:02X}{:02X}{:02X}", to(r), to(g), to(b))
}

fn random_colors(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    let base: f64 = rng.gen_range(0.0..360.0);
    let step = 360.0 / n.max(1) as f64;
    (0..n)
        .map(|i| {
            let hue = base + i as f64 * step + rng.gen_range(0.0..step * 0.3);
            hsl_hex(hue, rng.gen_range(0.45..0.75), rng.gen_range(0.35..0.55))
        })
        .collect()
}

/// Translates a list of labels, keeping the originals if translation would merge two of them.
fn translate_labels(labels: &[String], tr: &dyn Translator, locale: Locale) -> Result<Vec<String>, ChartError> {
    let out: Vec<String> = labels.iter().map(|l| tr.translate(l, locale)).collect::<Result<_, _>>()?;
    let uniq: HashSet<&String> = out.iter().collect();
    Ok(if uniq.len() == out.len() { out } else { labels.to_vec() })
}

fn join_title(topic: &str, title: &str, locale: Locale) -> String {
    match (topic.trim().is_empty(), locale) {
        (true, _) => title.to_string(),
        (false, Locale::Zh) => format!("{topic}：{title}"),
        (false, Locale::En) => format!("{topic}: {title}"),
    }
}

/// Places a peak annotation inside the plot area, next to the largest value where the type has one.
fn peak_annotation(spec: &ChartSpec, tr: &dyn Translator) -> Result<Option<Annotation>, ChartError> {
    let p = plan(spec)?;
    let (idx, value) = match spec.chart_type {
        ChartType::StackedBar => {
            let n = spec.series[0].points.len();
            (0..n)
                .map(|i| (i, spec.series.iter().map(|s| s.points[i].y).sum::<f64>()))
                .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
        }
        _ => spec.series[0]
            .points
            .iter()
            .enumerate()
            .map(|(i, pt)| (i, pt.y))
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a }),
    };
    let word = tr.translate("Peak", spec.locale)?;
    let text = format!("{word} {}", format_number(value));
    let w = text_width(&text, ANNOTATION_FONT);
    let plot = p.plot;
    if w + 4.0 > plot.width() {
        return Ok(None);
    }
    let y_min = plot.y0 + 0.8 * ANNOTATION_FONT + 2.0;
    let y_max = plot.y1 - 0.25 * ANNOTATION_FONT - 2.0;
    let categorical = matches!(
        spec.chart_type,
        ChartType::Bar | ChartType::StackedBar | ChartType::Line | ChartType::Area | ChartType::Histogram
    );
    let (x, y) = if categorical {
        let band = plot.width() / spec.series[0].points.len() as f64;
        let cx = plot.x0 + (idx as f64 + 0.5) * band;
        let (lo, hi) = p.y_range;
        let py = plot.y1 - (value - lo) / (hi - lo) * plot.height();
        (cx - w / 2.0, py - 6.0)
    } else {
        (plot.x0 + 4.0, y_min)
    };
    let x = x.clamp(plot.x0 + 2.0, plot.x1 - w - 2.0);
    let y = y.clamp(y_min, y_max.max(y_min));
    Ok(Some(Annotation { text, anchor: [round_to(x, 2), round_to(y, 2)] }))
}

fn mutate_rule_based(
    seed: &ChartSeed,
    topics: &TopicPool,
    rng_seed: u64,
    tr: &dyn Translator,
    locale: Locale,
) -> Result<Mutation, ChartError> {
    let mut rng = seeded_rng(&seed.id, rng_seed);
    let mut spec = seed.base_spec()?;
    let non_negative = matches!(spec.chart_type, ChartType::Pie | ChartType::Histogram | ChartType::StackedBar);

    for s in &mut spec.series {
        for p in &mut s.points {
            let d = decimals(p.y);
            let scaled = round_to(p.y * rng.gen_range(0.7..=1.3), d.max(if p.y.abs() < 10.0 { 1 } else { 0 }));
            p.y = if non_negative { scaled.max(0.0) } else { scaled } + 0.0;
        }
    }

    let topic = topics.topics().choose(&mut rng).cloned().unwrap_or_default();
    spec.colors = random_colors(&mut rng, spec.required_colors());
    spec.width_px = 480 + 8 * rng.gen_range(0..=60);
    spec.height_px = 360 + 8 * rng.gen_range(0..=45);
    let first = rng.gen_range(0..LegendPosition::AUTO.len());

    spec.locale = locale;
    spec.topic = tr.translate(&topic, locale)?;
    let title = tr.translate(&spec.title, locale)?;
    spec.title = join_title(&spec.topic, &title, locale);
    spec.x_label = tr.translate(&spec.x_label, locale)?;
    spec.y_label = tr.translate(&spec.y_label, locale)?;
    let labels: Vec<String> = spec.series.iter().map(|s| s.label.clone()).collect();
    for (s, l) in spec.series.iter_mut().zip(translate_labels(&labels, tr, locale)?) {
        s.label = l;
    }
    if spec.chart_type.shared_categories() {
        let cats: Vec<String> = spec.categories().iter().map(|c| c.to_string()).collect();
        let translated = translate_labels(&cats, tr, locale)?;
        for s in &mut spec.series {
            for (p, c) in s.points.iter_mut().zip(&translated) {
                p.x = c.clone();
            }
        }
    }

    let mut placed = false;
    'grow: for (w, h) in [(spec.width_px, spec.height_px), (960, 720)] {
        spec.width_px = w;
        spec.height_px = h;
        for k in 0..LegendPosition::AUTO.len() {
            spec.legend_position = LegendPosition::AUTO[(first + k) % LegendPosition::AUTO.len()];
            if plan(&spec).is_ok() {
                placed = true;
                break 'grow;
            }
        }
    }
    if !placed {
        return Err(ChartError::CanvasTooSmall { width: spec.width_px, height: spec.height_px });
    }
    spec.annotations = peak_annotation(&spec, tr)?.into_iter().collect();
    spec.check()?;
    let table = spec_to_table(&spec);
    Ok(Mutation { spec, table })
}

fn article_phrase(t: ChartType) -> String {
    let name = t.prose_name();
    let article = if name.starts_with(['a', 'e', 'i', 'o', 'u']) { "an" } else { "a" };
    format!("{article} {name} chart")
}

fn only_rule(t: ChartType) -> &'static str {
    match t {
        ChartType::Area => "Generate only an area chart with one column of value, not a stacked area chart.",
        ChartType::Bar => "Generate only a grouped or simple bar chart, not a stacked bar chart.",
        ChartType::StackedBar => "Generate only a stacked bar chart with non-negative values.",
        ChartType::Line => "Generate only a line chart whose series share the same x categories.",
        ChartType::Pie => "Generate only a pie chart with one column of non-negative value.",
        ChartType::Scatter => "Generate only a scatter chart with numeric x values.",
        ChartType::Histogram => "Generate only a histogram with one column of non-negative bin counts.",
        ChartType::Box => "Generate only a box plot, listing the raw observations of each group.",
        ChartType::Heatmap => "Generate only a heatmap whose rows share the same column categories.",
    }
}

const SPEC_SCHEMA: &str = r##"{"chart_type": "<type>", "title": "<headline>", "topic": "<topic>", "width_px": 800, "height_px": 600, "colors": ["#RRGGBB"], "x_label": "<x axis>", "y_label": "<y axis>", "annotations": [{"text": "<label>", "anchor": [x, y]}], "legend_position": "top_right | top_left | right | bottom", "locale": "zh"}"##;

/// Chart mutation request for the model route.
pub fn mutation_request(seed: &ChartSeed, topics: &TopicPool, rng_seed: u64) -> Result<ChatRequest, ChartError> {
    let code = if seed.script_text.trim().is_empty() { seed.data_table.as_str() } else { seed.script_text.as_str() };
    let prompt = fill(
        CHART_MUTATION,
        &[
            ("a_chart", &article_phrase(seed.chart_type)),
            ("chart", &format!("{} chart", seed.chart_type.prose_name())),
            ("code", code),
            ("only_rule", only_rule(seed.chart_type)),
            ("topics_pool", &topics.topics().join(", ")),
            ("schema", SPEC_SCHEMA),
        ],
    )?;
    Ok(ChatRequest::new(format!("chart-mutate:{}:{rng_seed}", seed.id), prompt))
}

/// Spec fields the model may set; series always come from the fenced table.
#[derive(Debug, Default, Deserialize)]
struct SpecDraft {
    chart_type: Option<ChartType>,
    title: Option<String>,
    topic: Option<String>,
    width_px: Option<u32>,
    height_px: Option<u32>,
    colors: Option<Vec<String>>,
    x_label: Option<String>,
    y_label: Option<String>,
    annotations: Option<Vec<Annotation>>,
    legend_position: Option<LegendPosition>,
    locale: Option<Locale>,
}

fn mutate_llm(seed: &ChartSeed, topics: &TopicPool, rng_seed: u64, gateway: &Gateway) -> Result<Mutation, ChartError> {
    let req = mutation_request(seed, topics, rng_seed)?;
    let completion = gateway.complete(&req)?;
    let table = extract_fenced_table(&completion.text)?;
    let draft: SpecDraft = serde_json::from_value(extract_json_fence(&completion.text)?)
        .map_err(|e| ChartError::SpecJson(e.to_string()))?;
    if let Some(got) = draft.chart_type {
        if got != seed.chart_type {
            return Err(ChartError::TypeMismatch { expected: seed.chart_type, got });
        }
    }
    let mut spec = seed.base_spec()?;
    spec.title = draft.title.unwrap_or(spec.title);
    spec.topic = draft.topic.unwrap_or(spec.topic);
    spec.width_px = draft.width_px.unwrap_or(spec.width_px);
    spec.height_px = draft.height_px.unwrap_or(spec.height_px);
    spec.x_label = draft.x_label.unwrap_or_default();
    spec.y_label = draft.y_label.unwrap_or(spec.y_label);
    spec.annotations = draft.annotations.unwrap_or_default();
    spec.legend_position = draft.legend_position.unwrap_or(spec.legend_position);
    spec.locale = draft.locale.unwrap_or(Locale::Zh);
    apply_table(&mut spec, &table)?;
    let mut colors = draft.colors.unwrap_or_default();
    let needed = spec.required_colors();
    if colors.len() < needed {
        let mut rng = seeded_rng(&seed.id, rng_seed);
        colors.extend(random_colors(&mut rng, needed - colors.len()));
    }
    spec.colors = colors;
    spec.check()?;
    Ok(Mutation { spec, table })
}

/// Produces a diversified spec and its data table from a seed.
pub fn mutate_spec(
    seed: &ChartSeed,
    topics: &TopicPool,
    rng_seed: u64,
    route: &MutationRoute<'_>,
) -> Result<Mutation, ChartError> {
    match route {
        MutationRoute::RuleBased { translator, locale } => {
            mutate_rule_based(seed, topics, rng_seed, *translator, *locale)
        }
        MutationRoute::Llm { gateway } => mutate_llm(seed, topics, rng_seed, gateway),
    }
}
