"""
UIモジュール

コマンドラインインターフェース（fit / predict / pdp / simulate）
"""
