/// Scripted table QA: (question, answer, task type, answer is correct).
pub type TablePair = (&'static str, &'static str, &'static str, bool);

#[derive(Debug, Clone, PartialEq)]
pub struct TableFixture {
    pub name: &'static str,
    pub html: &'static str,
    pub pairs: &'static [TablePair],
}

pub const TABLES: &[TableFixture] = &[
    TableFixture {
        name: "regional-sales",
        html: "<table>\n<tr><th>地区</th><th>第一季度</th><th>第二季度</th></tr>\n\
               <tr><td>华东</td><td>120</td><td>135</td></tr>\n\
               <tr><td>华南</td><td>98</td><td>110</td></tr>\n\
               <tr><td>华北</td><td>87</td><td>93</td></tr>\n</table>\n",
        pairs: &[
            ("华南地区第二季度的销量是多少？", "110", "Factoid", true),
            ("第一季度三个地区的销量合计是多少？", "305", "Computation", true),
            ("华东第二季度的销量是否高于第一季度？", "是", "Yes/No", true),
            ("列出所有地区。", "华东、华南、华北", "List", true),
            ("第二季度销量合计是多少？", "351", "Computation", false),
        ],
    },
    TableFixture {
        name: "yearly-income",
        html: "<table>\n<tr><th>年份</th><th>季度</th><th>收入</th></tr>\n\
               <tr><td rowspan=\"2\">2023</td><td>Q1</td><td>50</td></tr>\n\
               <tr><td>Q2</td><td>60</td></tr>\n\
               <tr><td rowspan=\"2\">2024</td><td>Q1</td><td>70</td></tr>\n\
               <tr><td>Q2</td><td>65</td></tr>\n</table>\n",
        pairs: &[
            ("2024年第一季度的收入是多少？", "70", "Factoid", true),
            ("四个季度的平均收入是多少？", "61.25", "Computation", true),
            ("2024年哪个季度的收入更高？", "Q1", "Comparison", true),
            ("2023年第二季度收入是多少？", "66", "Factoid", false),
        ],
    },
    TableFixture {
        name: "city-population",
        html: "<table>\n<thead>\n<tr><th rowspan=\"2\">城市</th><th colspan=\"2\">人口（万）</th></tr>\n\
               <tr><th>2020</th><th>2023</th></tr>\n</thead>\n<tbody>\n\
               <tr><td>上海</td><td>2488</td><td>2487</td></tr>\n\
               <tr><td>杭州</td><td>1194</td><td>1252</td></tr>\n\
               <tr><td>成都</td><td>2094</td><td>2140</td></tr>\n</tbody>\n</table>\n",
        pairs: &[
            ("2023年杭州的人口是多少万？", "1252", "Factoid", true),
            ("2023年三座城市的人口总和是多少万？", "5879", "Computation", true),
            ("成都2023年的人口是否多于2020年？", "是", "Yes/No", true),
            ("哪些城市被统计在内？", "上海, 杭州, 成都", "List", true),
            ("杭州人口三年增长了多少万？", "85", "Computation", false),
        ],
    },
    TableFixture {
        name: "exam-scores",
        html: "<table>\n<tr><th>姓名</th><th>语文</th><th>数学</th><th>英语</th></tr>\n\
               <tr><td>张三</td><td>88</td><td>92</td><td>79</td></tr>\n\
               <tr><td>李四</td><td>95</td><td>85</td><td>90</td></tr>\n\
               <tr><td>王五</td><td>72</td><td>98</td><td>84</td></tr>\n</table>\n",
        pairs: &[
            ("李四的英语成绩是多少？", "90", "Factoid", true),
            ("张三三门课的总分是多少？", "259", "Computation", true),
            ("数学成绩最高的是谁？", "王五", "Comparison", true),
            ("以下哪位同学语文成绩最高？A. 张三 B. 李四 C. 王五", "B. 李四", "Multiple Choice", true),
            ("王五三门课的平均分是多少？", "86", "Computation", false),
            ("语文成绩最低的是谁？", "赵六", "Comparison", false),
        ],
    },
    TableFixture {
        name: "project-status",
        html: "<table>\n<tr><th>项目</th><th>负责人</th><th>状态</th><th>预算（万元）</th></tr>\n\
               <tr><td>数据平台</td><td>李华</td><td>已完成</td><td>120</td></tr>\n\
               <tr><td>移动应用</td><td>王强</td><td>进行中</td><td>80</td></tr>\n\
               <tr><td>客服系统</td><td>李华</td><td colspan=\"2\">暂停</td></tr>\n</table>\n",
        pairs: &[
            ("移动应用项目的负责人是谁？", "王强", "Factoid", true),
            ("李华负责哪些项目？", "数据平台、客服系统", "List", true),
            ("数据平台项目是否已经完成？", "是", "Yes/No", true),
            ("为什么客服系统项目暂停了？", "预算不足", "Causal", true),
            ("已完成项目的预算是多少万元？", "150", "Factoid", false),
        ],
    },
    TableFixture {
        name: "monthly-rainfall",
        html: "<table>\n<tr><th>月份</th><th>降水量（毫米）</th><th>降水天数</th></tr>\n\
               <tr><td>6月</td><td>156.2</td><td>12</td></tr>\n\
               <tr><td>7月</td><td>210.5</td><td>15</td></tr>\n\
               <tr><td>8月</td><td>180.3</td><td>13</td></tr>\n</table>\n",
        pairs: &[
            ("7月的降水量是多少毫米？", "210.5", "Factoid", true),
            ("三个月的降水天数合计是多少？", "40", "Computation", true),
            ("降水量呈现怎样的变化？", "先增后减", "Time Series", true),
            ("6月与8月的降水量相差多少毫米？", "24.1", "Computation", true),
            ("8月的降水天数是多少？", "14", "Factoid", false),
        ],
    },
];

pub fn table_fixtures() -> &'static [TableFixture] {
    TABLES
}
