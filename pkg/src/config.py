import os
from pathlib import Path

from dotenv import load_dotenv

# 项目根目录
BASE_DIR = Path(__file__).parent.parent.absolute()

# 读取 .env（不覆盖已有环境变量）
load_dotenv(BASE_DIR / ".env")

# 运行配置
HSF_THREADS = max(1, int(os.environ.get("HSF_THREADS", os.cpu_count() or 1)))  # 工作线程上限
LOG_LEVEL = os.environ.get("HSF_LOG_LEVEL", "INFO")  # 日志级别
LOG_DIR = os.environ.get("HSF_LOG_DIR", "")  # 日志文件目录，为空则只输出到stderr
SHOW_PROGRESS = os.environ.get("HSF_PROGRESS", "0") not in ("0", "", "false", "False")

# 线性代数容差
LAGRANGIAN_TOL = 1e-9  # ω(e_i, e_j) 绝对容差
SYMPLECTIC_TOL = 1e-8  # 辛缺陷验收阈值
INVARIANCE_TOL = 1e-8  # 不变丛残差（主角正弦）
MODULUS_GAP_TOL = 1e-6  # 特征值模长簇的相对间隔
DIRECT_EIG_SPREAD = 30.0  # 周期乘积对数模长跨度不超过该值时直接求特征值
PERIOD_SWEEP_TOL = 1e-12  # 周期 QR 迭代相邻两轮的相对容差
PERIOD_MAX_SWEEPS = 500
RANK_TOL = 1e-12  # 子空间基的相对秩容差
LOG_RANGE_LIMIT = 700.0  # 超过该对数量级即视为溢出
DEFAULT_GRASSMANN_SAMPLES = 10 ** 4

# 控制判定
DOMINATION_RATIO = 0.5  # ‖Dfⁿu‖ ≤ ‖Dfⁿv‖/2
CERTIFY_PERIODS = 4  # 证明"对所有更大n成立"时最多尝试的周期倍数

# 马蹄构造
L_FACTOR = 0.5  # L = floor(L_FACTOR · bound)
MARKOV_EXHAUSTIVE_CAP = 2 ** 16  # 超过则抽样验证
MARKOV_MATRIX_CAP = 4096  # 转移矩阵显式生成的上限
MARKOV_SAMPLED_ROWS = 64
DEFAULT_SLICE_CAP = 64  # CLI --verify 默认截断的切片数
CONTAINMENT_SLACK = 1e-9  # 区间包含判定的对数容差
OUTWARD_ULPS = 4.0  # 对数半边长的外舍入（以机器精度计）

# 符号动力学
PERRON_TOL = 1e-10
PERRON_MAX_ITER = 100000
MAX_WORD_BITS = 64  # 打包词的位宽

# 估计器
TORUS_HORIZON = 50  # 双精度环面迭代的可靠步数
MIN_FIT_POINTS = 3
KATOK_SAMPLE_CEILING = 0.25  # 覆盖数超过样本数的该比例则判定样本不足

# 系统
PERIODIC_CLOSURE_TOL = 1e-9
NEWTON_MAX_ITER = 60
NEWTON_STARTS = 32

# 可被 --config 覆盖的容差名
OVERRIDABLE = (
    "LAGRANGIAN_TOL", "SYMPLECTIC_TOL", "INVARIANCE_TOL", "MODULUS_GAP_TOL",
    "PERIODIC_CLOSURE_TOL", "PERRON_TOL", "L_FACTOR", "MARKOV_EXHAUSTIVE_CAP",
    "MARKOV_SAMPLED_ROWS", "DEFAULT_SLICE_CAP", "CONTAINMENT_SLACK", "TORUS_HORIZON",
    "DEFAULT_GRASSMANN_SAMPLES",
)
