use docsynth::layout::{BBox, LayoutDocument, Line, Region, RegionKind, SCHEMA_VERSION};

/// A scripted QA pair. `grounded` is false for answers planted to fail the
/// grounding check.
#[derive(Debug, Clone, PartialEq)]
pub struct FixturePair {
    pub question: &'static str,
    pub answer: &'static str,
    pub label: &'static str,
    pub grounded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocFixture {
    pub name: &'static str,
    pub doc: LayoutDocument,
    pub pairs: Vec<FixturePair>,
}

struct PageSrc {
    name: &'static str,
    blocks: &'static [(RegionKind, &'static [&'static str])],
    pairs: &'static [(&'static str, &'static str, &'static str, bool)],
}

use RegionKind::{Chart, PrintedFormula, PrintedText, Seal, Table};

const PAGES: &[PageSrc] = &[
    PageSrc {
        name: "annual-report",
        blocks: &[
            (PrintedText, &["华信科技股份有限公司2023年年度报告摘要"]),
            (
                PrintedText,
                &[
                    "2023年公司实现营业收入12.5亿元，同比增长18.3%。",
                    "归属于上市公司股东的净利润为2.1亿元。",
                    "公司研发投入占营业收入的比例为9.6%。",
                ],
            ),
            (Table, &["指标 2022年 2023年", "营业收入 10.6亿元 12.5亿元", "毛利率 29.8% 31.4%"]),
            (Seal, &["华信科技股份有限公司"]),
        ],
        pairs: &[
            ("2023年公司营业收入是多少？", "12.5亿元", "printed_text", true),
            ("2023年的毛利率是多少？", "31.4%", "table", true),
            ("研发投入占营业收入的比例是多少？", "9.6%", "printed_text", true),
            ("2023年营业收入同比增长了多少？", "21.7%", "printed_text", false),
            ("归属于上市公司股东的净利润是多少？", "3.4亿元", "printed_text", false),
        ],
    },
    PageSrc {
        name: "weather-bulletin",
        blocks: &[
            (PrintedText, &["北京市气象台天气预报"]),
            (PrintedText, &["今天白天晴转多云，最高气温28℃。", "夜间有小雨，最低气温17℃。", "南风三到四级，相对湿度65%。"]),
            (Table, &["日期 天气 气温", "6月12日 多云 18~29℃", "6月13日 雷阵雨 19~26℃"]),
        ],
        pairs: &[
            ("今天白天的最高气温是多少？", "28℃", "printed_text", true),
            ("6月13日的天气如何？", "雷阵雨", "table", true),
            ("今天的相对湿度是多少？", "65%", "printed_text", true),
            ("夜间最低气温是多少？", "15℃", "printed_text", false),
            ("6月12日的气温范围是多少？", "20~31℃", "table", false),
        ],
    },
    PageSrc {
        name: "school-notice",
        blocks: &[
            (PrintedText, &["关于2024年暑假放假安排的通知"]),
            (
                PrintedText,
                &[
                    "根据校历安排，学生于7月6日开始放假。",
                    "秋季学期于9月1日正式开学，8月31日报到。",
                    "假期值班电话为010-62751234。",
                ],
            ),
            (Seal, &["第一实验中学"]),
        ],
        pairs: &[
            ("学生从哪天开始放假？", "7月6日", "printed_text", true),
            ("秋季学期什么时候正式开学？", "9月1日", "printed_text", true),
            ("假期值班电话是多少？", "010-62751234", "printed_text", true),
            ("这份通知由哪所学校发布？", "第一实验中学", "seal", true),
            ("学生应在哪天报到？", "8月30日", "printed_text", false),
        ],
    },
    PageSrc {
        name: "purifier-manual",
        blocks: &[
            (PrintedText, &["智能空气净化器使用说明书"]),
            (PrintedText, &["额定功率为45W，适用面积为30至50平方米。", "滤网建议每6个月更换一次。", "整机重量为6.8千克。"]),
            (Table, &["型号 AP-300 AP-500", "CADR值 300m³/h 500m³/h", "噪音 35dB 42dB"]),
        ],
        pairs: &[
            ("净化器的额定功率是多少？", "45W", "printed_text", true),
            ("滤网多久更换一次？", "每6个月", "printed_text", true),
            ("AP-500的CADR值是多少？", "500m³/h", "table", true),
            ("整机重量是多少？", "6.8千克", "printed_text", true),
            ("AP-300运行时的噪音是多少？", "38dB", "table", false),
        ],
    },
    PageSrc {
        name: "train-timetable",
        blocks: &[
            (PrintedText, &["G101次列车时刻表"]),
            (Table, &["车站 到达 出发", "北京南 始发 06:36", "济南西 08:02 08:04", "南京南 10:28 10:30", "上海虹桥 11:50 终到"]),
            (PrintedText, &["全程运行时间为5小时14分。"]),
        ],
        pairs: &[
            ("列车从济南西几点出发？", "08:04", "table", true),
            ("列车几点到达上海虹桥？", "11:50", "table", true),
            ("全程运行时间是多久？", "5小时14分", "printed_text", true),
            ("这趟列车的始发站是哪里？", "北京南", "table", true),
            ("列车几点到达南京南？", "10:45", "table", false),
        ],
    },
    PageSrc {
        name: "lab-report",
        blocks: &[
            (PrintedText, &["市第一人民医院检验报告单"]),
            (PrintedText, &["姓名：张明 性别：男 年龄：45岁", "标本类型：静脉血 送检日期：2024-03-15"]),
            (Table, &["项目 结果 参考范围", "白细胞计数 6.2 3.5-9.5", "血红蛋白 142 130-175", "血小板计数 215 125-350"]),
            (Seal, &["检验科专用章"]),
        ],
        pairs: &[
            ("白细胞计数的结果是多少？", "6.2", "table", true),
            ("血红蛋白的参考范围是多少？", "130-175", "table", true),
            ("患者的年龄是多少？", "45岁", "printed_text", true),
            ("标本的送检日期是哪天？", "2024-03-15", "printed_text", true),
            ("血小板计数的结果是多少？", "198", "table", false),
        ],
    },
    PageSrc {
        name: "lunch-menu",
        blocks: &[
            (PrintedText, &["春风小馆午市菜单"]),
            (Table, &["菜品 价格", "宫保鸡丁 38元", "鱼香肉丝 32元", "麻婆豆腐 26元", "清炒时蔬 18元"]),
            (PrintedText, &["午市套餐每份加收5元可配米饭和例汤。", "营业时间：11:00至14:00。"]),
        ],
        pairs: &[
            ("宫保鸡丁的价格是多少？", "38元", "table", true),
            ("麻婆豆腐多少钱？", "26元", "table", true),
            ("午市的营业时间是什么？", "11:00至14:00", "printed_text", true),
            ("套餐每份加收多少钱？", "5元", "printed_text", true),
            ("清炒时蔬的价格是多少？", "22元", "table", false),
        ],
    },
    PageSrc {
        name: "lease-contract",
        blocks: &[
            (PrintedText, &["房屋租赁合同"]),
            (
                PrintedText,
                &[
                    "甲方：李华 乙方：王强",
                    "租赁期限自2024年1月1日起至2025年12月31日止。",
                    "月租金为人民币4500元，押金为一个月租金。",
                    "乙方应于每月5日前支付当月租金。",
                ],
            ),
            (Seal, &["合同专用章"]),
        ],
        pairs: &[
            ("每月的租金是多少？", "4500元", "printed_text", true),
            ("租赁期限到哪天为止？", "2025年12月31日", "printed_text", true),
            ("合同的乙方是谁？", "王强", "printed_text", true),
            ("乙方应在什么时候支付租金？", "每月5日前", "printed_text", true),
            ("租赁期限从哪天开始？", "2024年3月1日", "printed_text", false),
        ],
    },
    PageSrc {
        name: "rice-disease-abstract",
        blocks: &[
            (PrintedText, &["基于深度学习的水稻病害识别研究"]),
            (
                PrintedText,
                &[
                    "本文构建了包含12类病害的图像数据集，共计8600张图片。",
                    "所提模型在测试集上的准确率达到96.4%。",
                    "模型参数量为3.2M，推理速度为每张15毫秒。",
                ],
            ),
            (PrintedFormula, &["F1 = 2PR/(P+R)"]),
        ],
        pairs: &[
            ("数据集包含多少类病害？", "12类", "printed_text", true),
            ("数据集共有多少张图片？", "8600张", "printed_text", true),
            ("模型在测试集上的准确率是多少？", "96.4%", "printed_text", true),
            ("F1分数的计算公式是什么？", "F1 = 2PR/(P+R)", "printed_formula", true),
            ("模型的推理速度是多少？", "每张12毫秒", "printed_text", false),
        ],
    },
    PageSrc {
        name: "city-statistics",
        blocks: &[
            (PrintedText, &["2023年滨江市国民经济和社会发展统计公报"]),
            (
                PrintedText,
                &[
                    "全年地区生产总值为3280亿元，比上年增长6.1%。",
                    "年末常住人口为512.6万人。",
                    "全年居民人均可支配收入为58320元。",
                ],
            ),
            (Chart, &["2019-2023年地区生产总值（亿元）", "2019 2650 2020 2780 2021 2950 2022 3090 2023 3280"]),
        ],
        pairs: &[
            ("全年地区生产总值是多少？", "3280亿元", "printed_text", true),
            ("年末常住人口是多少？", "512.6万人", "printed_text", true),
            ("全年居民人均可支配收入是多少？", "58320元", "printed_text", true),
            ("2021年的地区生产总值是多少亿元？", "2950", "chart", true),
            ("地区生产总值比上年增长了多少？", "7.2%", "printed_text", false),
        ],
    },
];

const PAGE_W: f64 = 1240.0;
const PAGE_H: f64 = 1754.0;
const LINE_H: f64 = 36.0;

fn layout(blocks: &[(RegionKind, &[&str])]) -> LayoutDocument {
    let mut y = 80.0;
    let mut regions = Vec::new();
    for (kind, lines) in blocks {
        let top = y;
        let mut out = Vec::new();
        for text in *lines {
            let w = (text.chars().count() as f64 * 30.0 + 20.0).min(1080.0);
            out.push(Line { text: text.to_string(), bbox: BBox::new(80.0, y + 4.0, 80.0 + w, y + 4.0 + LINE_H) });
            y += LINE_H + 8.0;
        }
        regions.push(Region { kind: *kind, bbox: BBox::new(70.0, top, 1170.0, y + 4.0), lines: out });
        y += 40.0;
    }
    assert!(y < PAGE_H);
    LayoutDocument { schema_version: SCHEMA_VERSION, page_width: PAGE_W, page_height: PAGE_H, regions }
}

pub fn doc_fixtures() -> Vec<DocFixture> {
    PAGES
        .iter()
        .map(|p| DocFixture {
            name: p.name,
            doc: layout(p.blocks),
            pairs: p
                .pairs
                .iter()
                .map(|&(question, answer, label, grounded)| FixturePair { question, answer, label, grounded })
                .collect(),
        })
        .collect()
}
