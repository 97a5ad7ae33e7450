"""换能器计算子包：模型、散射矩阵、性能指标、物理计算器、时域校验与器件目录。"""
# 各模块按需导入，包级不做聚合导出。
